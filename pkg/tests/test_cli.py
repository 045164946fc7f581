"""Command line surface: exit codes, report shape, determinism, and
re-verification of serialized witnesses by independent recomputation.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from ncconvex import cli, examples, matkit, ncalg, realize, xycvx
from ncconvex.cli import (
    EXIT_INCONCLUSIVE,
    EXIT_INPUT,
    EXIT_NEGATIVE,
    EXIT_OK,
    strip_timings,
)

DATA = Path(cli.__file__).parent / "data"


def unmat(rows):
    return np.array([[complex(a, b) for a, b in row] for row in rows])


def unvec(rows):
    return np.array([complex(a, b) for a, b in rows])


def run_out(tmp_path, name, argv):
    out = tmp_path / name
    code = cli.main(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


# ---------------------------------------------------------------------------
# eval

def test_eval_intro(tmp_path, capsys):
    code, rep = run_out(tmp_path, "eval.json", [
        "eval", str(DATA / "intro_poly.txt"), str(DATA / "intro_tuple.json")])
    assert code == EXIT_OK
    got = capsys.readouterr().out
    assert "hermiticity residual: 38" in got
    val = unmat(rep["results"]["value"])
    assert np.array_equal(val, np.array([[69, 99], [61, 99]], dtype=complex))


def test_eval_wrong_counts(tmp_path, capsys):
    bad = tmp_path / "bad_tuple.json"
    bad.write_text(json.dumps({"n": 2, "A": [], "X": [
        [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]}))
    code = cli.main(["eval", str(DATA / "intro_poly.txt"), str(bad)])
    assert code == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_eval_parse_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("vars a: | x: x\n1 * x\nwhat\n")
    code = cli.main(["eval", str(bad), str(DATA / "intro_tuple.json")])
    assert code == EXIT_INPUT
    assert "line 3" in capsys.readouterr().err


def test_missing_file_is_input_error(capsys):
    code = cli.main(["eval", "/nonexistent/p.txt",
                     str(DATA / "intro_tuple.json")])
    assert code == EXIT_INPUT


# ---------------------------------------------------------------------------
# partial

def test_partial_xax_positive(tmp_path):
    code, rep = run_out(tmp_path, "p.json", [
        "partial", str(DATA / "xax_poly.txt"),
        "--sizes", "1,2", "--samples", "8", "--seed", "1"])
    assert code == EXIT_OK
    res = rep["results"]
    bf = res["butterfly_poly"]
    assert bf["k"] == 1
    assert bf["w_psd_at_zero"]
    assert list(bf["w"]) == ["a"]
    assert list(bf["ell"]) == ["x"]
    assert bf["fbar"] == {}
    for chunk in res["hessian_scan"]["per_size"]:
        assert "witness" not in chunk
        if not chunk["empty"]:
            assert chunk["min_lambda"] >= -1e-8


def test_partial_xax_sharpness_witness_reverifies(tmp_path):
    code, rep = run_out(tmp_path, "p.json", [
        "partial", str(DATA / "xax_poly.txt"),
        "--sizes", "2", "--samples", "25", "--seed", "3"])
    assert code == EXIT_OK
    loc = rep["results"]["localizing_scan"]
    assert loc["indefinite_points"] > 0
    wit = loc["sharpness_witness"]
    assert wit["kind"] == "doubled-point"
    assert wit["quadratic_value"] < 0
    # independent recomputation from the serialized data
    p = ncalg.parse_poly((DATA / "xax_poly.txt").read_text())
    R = realize.linearize_poly(p)
    pt = wit["point"]
    t = ncalg.HermTuple(pt["n"], tuple(unmat(M) for M in pt["A"]),
                        tuple(unmat(M) for M in pt["X"]), validate=False)
    H = tuple(unmat(M) for M in wit["direction"])
    h = unvec(wit["h"])
    from ncconvex.partialcvx import partial_hessian
    quad = float(np.real(h.conj() @ partial_hessian(R, t, H) @ h))
    assert quad == pytest.approx(wit["quadratic_value"], rel=1e-8)


def test_partial_quartic_negative_with_midpoint_witness(tmp_path):
    code, rep = run_out(tmp_path, "p.json", [
        "partial", str(DATA / "x4_poly.txt"),
        "--sizes", "1,2", "--samples", "6"])
    assert code == EXIT_NEGATIVE
    entry = rep["results"]["not_convexible"]
    assert "degree 4" in entry["message"]
    wit = entry["witness"]
    assert wit["kind"] == "midpoint"
    assert wit["gap_lambda_min"] < 0
    # rebuild the gap from the report alone
    p = ncalg.parse_poly((DATA / "x4_poly.txt").read_text())
    A = tuple(unmat(M) for M in wit["A"])
    X1 = tuple(unmat(M) for M in wit["X1"])
    X2 = tuple(unmat(M) for M in wit["X2"])
    n = X1[0].shape[0]
    mid = tuple((a + b) / 2 for a, b in zip(X1, X2))

    def ev(X):
        return ncalg.eval_poly(p, ncalg.HermTuple(n, A, X, validate=False))

    gap = (ev(X1) + ev(X2)) / 2 - ev(mid)
    lam = float(np.linalg.eigvalsh(matkit.herm(gap))[0])
    assert lam == pytest.approx(wit["gap_lambda_min"], rel=1e-8)


def test_partial_xax_on_dom_region_is_negative(tmp_path):
    code, rep = run_out(tmp_path, "p.json", [
        "partial", str(DATA / "xax_poly.txt"),
        "--region", "dom", "--sizes", "2", "--samples", "25", "--seed", "2"])
    assert code == EXIT_NEGATIVE
    chunks = rep["results"]["hessian_scan"]["per_size"]
    wit = next(c["witness"] for c in chunks if "witness" in c)
    assert wit["kind"] == "hessian-negativity"
    assert wit["lambda_min"] < 0


def test_partial_realization_input(tmp_path):
    p = ncalg.parse_poly((DATA / "xax_poly.txt").read_text())
    R = realize.linearize_poly(p)
    rfile = tmp_path / "r.json"
    rfile.write_text(json.dumps(realize.realization_to_json(R)))
    code, rep = run_out(tmp_path, "p.json", [
        "partial", str(rfile), "--sizes", "1,2", "--samples", "6"])
    assert code == EXIT_OK
    assert rep["results"]["input"]["kind"] == "realization"
    assert rep["results"]["input"]["e"] == 4
    assert "butterfly" in rep["results"]


def test_partial_ball_region(tmp_path):
    code, rep = run_out(tmp_path, "p.json", [
        "partial", str(DATA / "xax_poly.txt"),
        "--region", "ball:0.3", "--sizes", "1", "--samples", "5"])
    assert code in (EXIT_OK, EXIT_NEGATIVE)
    assert rep["results"]["hessian_scan"]["region"] == "ball:0.3"


# ---------------------------------------------------------------------------
# xy

def test_xy_square_poly_pair_witness_reverifies(tmp_path):
    code, rep = run_out(tmp_path, "xy.json", [
        "xy", str(DATA / "square_xy_poly.txt"),
        "--sizes", "1,2", "--samples", "30", "--scale", "0.9", "--seed", "0"])
    assert code == EXIT_NEGATIVE
    pw = rep["results"]["pair_witness"]
    assert pw["defect_value"] < 0
    X, Y, V = unmat(pw["X"]), unmat(pw["Y"]), unmat(pw["V"])
    h = unvec(pw["h"])
    assert xycvx.is_xy_pair(X, Y, V)
    p = xycvx.support_screen(
        ncalg.parse_poly((DATA / "square_xy_poly.txt").read_text()))
    rep2 = xycvx.xy_convexity_test(p, xycvx.XYPair(X, Y, V))
    quad = float(np.real(h.conj() @ rep2.defect @ h))
    assert quad == pytest.approx(pw["defect_value"], rel=1e-6, abs=1e-9)


def test_xy_square_poly_small_scale_inconclusive(tmp_path):
    code, rep = run_out(tmp_path, "xy.json", [
        "xy", str(DATA / "square_xy_poly.txt"),
        "--sizes", "1", "--samples", "5", "--scale", "0.05"])
    assert code == EXIT_INCONCLUSIVE
    res = rep["results"]
    assert res["verdict"] == "inconclusive"
    assert res["gram"]["status"] == "not-certifiable-pinned"
    assert res["gram"]["pinned_lambda_min"] == pytest.approx(-1.0, abs=1e-9)
    for chunk in res["middle_matrix_scan"]["per_size"]:
        assert "witness" not in chunk


def test_xy_certified_poly(tmp_path):
    rng = np.random.default_rng(41)
    p, _ = xycvx.synthesize_certified(rng, N=2)
    pfile = tmp_path / "cert_poly.txt"
    pfile.write_text(ncalg.format_poly(p))
    code, rep = run_out(tmp_path, "xy.json", [
        "xy", str(pfile), "--sizes", "1,2", "--samples", "8", "--seed", "5"])
    assert code == EXIT_OK
    res = rep["results"]
    assert res["verdict"] == "certified"
    assert res["verification"]["coeff_ok"]
    assert res["verification"]["min_defect_eig"] >= -1e-8
    # the shipped certificate reconstructs the input polynomial
    cert = xycvx.certificate_from_json(res["certificate"])
    recon = cert.reconstruct()
    for w in set(p.words()) | set(recon.words()):
        assert recon.scalar_coeff(w) == pytest.approx(
            p.scalar_coeff(w), abs=1e-7)


def test_xy_off_support_rejected(tmp_path):
    pfile = tmp_path / "x2y2.txt"
    pfile.write_text("vars a: | x: x y\n1 * x x y y\n1 * y y x x\n")
    code, rep = run_out(tmp_path, "xy.json", [
        "xy", str(pfile), "--sizes", "1", "--samples", "2"])
    assert code == EXIT_NEGATIVE
    scr = rep["results"]["screen"]
    assert not scr["accepted"]
    assert scr["rejected_monomial"] in ("xxyy", "yyxx")


def test_xy_nonsymmetric_is_input_error(tmp_path, capsys):
    pfile = tmp_path / "ns.txt"
    pfile.write_text("vars a: | x: x y\n1 * x y\n")
    code = cli.main(["xy", str(pfile)])
    assert code == EXIT_INPUT


# ---------------------------------------------------------------------------
# reproduce

@pytest.mark.parametrize("rid", ["intro-eval", "example-A3", "example-A4"])
def test_reproduce_ids_match(rid, capsys):
    code = cli.main(["reproduce", rid])
    assert code == EXIT_OK
    assert "%s: ok" % rid in capsys.readouterr().out


def test_reproduce_unknown_id(capsys):
    code = cli.main(["reproduce", "nope"])
    assert code == EXIT_INPUT
    assert "unknown example id" in capsys.readouterr().err


def test_reproduce_mismatch_prints_diff(monkeypatch, capsys):
    monkeypatch.setitem(cli._REPRODUCE, "intro-eval",
                        (lambda: {"herm_residual": 0.0},
                         "expected_intro_eval.json"))
    code = cli.main(["reproduce", "intro-eval"])
    assert code == EXIT_NEGATIVE
    out = capsys.readouterr().out
    assert "--- expected" in out
    assert "+++ actual" in out


# ---------------------------------------------------------------------------
# config validation and determinism

@pytest.mark.parametrize("flags", [
    ["--samples", "0"],
    ["--sizes", "0,2"],
    ["--sizes", "a,b"],
    ["--workers", "0"],
    ["--scale", "-1"],
    ["--region", "bogus"],
])
def test_bad_config_exits_input(flags, capsys):
    code = cli.main(["partial", str(DATA / "xax_poly.txt")] + flags)
    assert code == EXIT_INPUT


def test_strip_timings_removes_nested_keys():
    rep = {"a": {"time_s": 1.0, "b": [{"time_s": 2.0, "x": 1}]}, "time_s": 3}
    out = strip_timings(rep)
    assert out == {"a": {"b": [{"x": 1}]}}


def test_reports_deterministic_across_runs(tmp_path):
    argv = ["partial", str(DATA / "xax_poly.txt"),
            "--sizes", "1,2", "--samples", "6", "--seed", "9"]
    _, rep1 = run_out(tmp_path, "a.json", argv)
    _, rep2 = run_out(tmp_path, "b.json", argv)
    assert json.dumps(strip_timings(rep1), sort_keys=True) \
        == json.dumps(strip_timings(rep2), sort_keys=True)


def test_reports_independent_of_workers(tmp_path):
    base = ["xy", str(DATA / "square_xy_poly.txt"),
            "--sizes", "1,2", "--samples", "20", "--scale", "0.9",
            "--seed", "4"]
    _, rep1 = run_out(tmp_path, "w1.json", base + ["--workers", "1"])
    _, rep2 = run_out(tmp_path, "w2.json", base + ["--workers", "3"])
    assert json.dumps(strip_timings(rep1["results"]), sort_keys=True) \
        == json.dumps(strip_timings(rep2["results"]), sort_keys=True)


def test_version_flag():
    with pytest.raises(SystemExit) as ei:
        cli.main(["--version"])
    assert ei.value.code == 0
