"""Command line front end.

Subcommands
-----------
eval       evaluate a polynomial file at a matrix tuple file
partial    convexity in the designated letters for a polynomial or
           realization: domain scans, butterfly data, witnesses
xy         convexity in x and y separately for a bivariate polynomial:
           support screen, middle-matrix scan, Gram certificate
reproduce  rerun a pinned example study and compare with the stored summary

Reports are JSON with matrices as row-major [re, im] entries.  With a fixed
seed and config a rerun reproduces the report byte for byte apart from the
time_s fields.  Exit codes: 0 success, 1 mathematical negative (verified
witness or screen rejection), 2 input error, 3 numerically inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, butterfly, examples, ncalg, partialcvx, realize, \
    xycvx
from .ncalg import ContextError, HermTuple, ShapeError, SymmetryError

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_INCONCLUSIVE = 3


class InputError(Exception):
    """Bad file, flag, or precondition; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class AnalysisConfig:
    seed: int = 0
    sizes: tuple = (1, 2, 3)
    samples: int = 30
    tol_psd: float = 1e-8
    tol_inv: float = 1e-10
    tol_aff: float = 1e-9
    region: str = "default"
    scale: float = 0.6
    workers: int = 1
    out: str = None

    def __post_init__(self):
        if not self.sizes or any(int(s) < 1 for s in self.sizes):
            raise InputError("sizes must be positive")
        if int(self.samples) < 1:
            raise InputError("samples must be at least 1")
        for name in ("tol_psd", "tol_inv", "tol_aff", "scale"):
            if float(getattr(self, name)) <= 0:
                raise InputError("%s must be positive" % name)
        if int(self.workers) < 1:
            raise InputError("workers must be at least 1")
        if int(self.seed) < 0:
            raise InputError("seed must be nonnegative")

    def echo(self):
        return {
            "seed": int(self.seed), "sizes": [int(s) for s in self.sizes],
            "samples": int(self.samples), "tol_psd": float(self.tol_psd),
            "tol_inv": float(self.tol_inv), "tol_aff": float(self.tol_aff),
            "region": self.region, "scale": float(self.scale),
            "workers": int(self.workers),
        }


def config_from_args(args):
    sizes = args.sizes
    if isinstance(sizes, str):
        try:
            sizes = tuple(int(s) for s in sizes.split(","))
        except ValueError:
            raise InputError("bad --sizes %r; expected e.g. 1,2,3" % sizes)
    return AnalysisConfig(
        seed=args.seed, sizes=sizes, samples=args.samples,
        tol_psd=args.tol_psd, tol_inv=args.tol_inv, tol_aff=args.tol_aff,
        region=args.region, scale=args.scale, workers=args.workers,
        out=args.out)


# ---------------------------------------------------------------------------
# matrix JSON and file loading

def jmat(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def junmat(rows):
    try:
        return np.array([[complex(re, im) for re, im in row]
                         for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InputError("bad matrix entry: %s" % exc)


def jvec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(str(exc))


def load_poly(path):
    try:
        return ncalg.parse_poly(_read(path))
    except ValueError as exc:
        raise InputError("%s: %s" % (path, exc))


def load_input(path):
    """Polynomial text or realization JSON, sniffed by leading brace."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        try:
            R = realize.realization_from_json(json.loads(text))
        except (KeyError, ValueError) as exc:
            raise InputError("%s: bad realization JSON: %s" % (path, exc))
        return "realization", R
    try:
        return "poly", ncalg.parse_poly(text)
    except ValueError as exc:
        raise InputError("%s: %s" % (path, exc))


def load_tuple(path, ctx):
    """JSON {n, A: [matrices], X: [matrices]} against a variable context."""
    try:
        data = json.loads(_read(path))
    except ValueError as exc:
        raise InputError("%s: %s" % (path, exc))
    A = [junmat(M) for M in data.get("A", [])]
    X = [junmat(M) for M in data.get("X", [])]
    if len(A) != ctx.h or len(X) != ctx.g:
        raise InputError(
            "tuple has %d a-class and %d x-class matrices; polynomial "
            "expects %d and %d" % (len(A), len(X), ctx.h, ctx.g))
    mats = A + X
    if not mats:
        n = int(data.get("n", 1))
    else:
        n = mats[0].shape[0]
        for M in mats:
            if M.shape != (n, n):
                raise InputError("tuple matrices must share one square size")
    return HermTuple(n, tuple(A), tuple(X), validate=False)


# ---------------------------------------------------------------------------
# report plumbing

def new_report(command, cfg=None):
    rep = {"tool": {"name": "ncconvex", "version": __version__},
           "command": command, "results": {}}
    if cfg is not None:
        rep["config"] = cfg.echo()
    return rep


def strip_timings(obj):
    """Copy with every time_s field removed, for byte comparisons."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k != "time_s"}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def emit_report(report, out):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
        print("report written to %s" % out)
    else:
        sys.stdout.write(text)


def _tuple_json(t):
    return {"n": t.n, "A": [jmat(M) for M in t.A],
            "X": [jmat(M) for M in t.X]}


def _poly_json(p):
    out = {}
    for w in p.words():
        key = " ".join(p.ctx.name(i) for i in w) if w else "1"
        out[key] = jmat(p.coeffs[w]) if not p.is_scalar \
            else [float(p.scalar_coeff(w).real), float(p.scalar_coeff(w).imag)]
    return out


# ---------------------------------------------------------------------------
# regions

def region_predicate(name, R, frame, cfg):
    if name in ("default", "dom-plus"):
        return lambda t: realize.in_dom_plus(R, t, frame, cfg.tol_psd,
                                             cfg.tol_inv)
    if name == "dom":
        return lambda t: realize.in_dom(R, t, cfg.tol_inv)
    if name == "kebab":
        return lambda t: realize.in_dom_kebab(R, t, cfg.tol_inv)
    if name == "kebab-plus":
        return lambda t: realize.in_dom_kebab_plus(R, t, frame, cfg.tol_psd,
                                                   cfg.tol_inv)
    if name.startswith("ball:"):
        try:
            radius = float(name.split(":", 1)[1])
        except ValueError:
            raise InputError("bad region %r; expected ball:RADIUS" % name)
        return lambda t: all(float(np.linalg.norm(M, 2)) <= radius
                             for M in t.mats)
    raise InputError("unknown region %r (dom, dom-plus, kebab, kebab-plus, "
                     "ball:RADIUS)" % name)


# ---------------------------------------------------------------------------
# eval

def cmd_eval(args):
    p = load_poly(args.poly)
    t = load_tuple(args.tuple, p.ctx)
    try:
        val = ncalg.eval_poly(p, t)
    except ContextError as exc:
        raise InputError(str(exc))
    herm_res = float(np.linalg.norm(val - val.conj().T, 2))
    for row in val:
        print("  ".join(ncalg.format_complex(z) for z in row))
    print("hermiticity residual: %s" % ncalg.format_complex(herm_res))
    if args.out:
        emit_report({"tool": {"name": "ncconvex", "version": __version__},
                     "command": "eval",
                     "results": {"value": jmat(val),
                                 "herm_residual": herm_res}}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# partial convexity

def _serialize_hessian_witness(wit):
    probe = wit.probe
    hess = np.asarray(probe.value)
    h = np.linalg.eigh(hess)[1][:, 0]
    return {
        "kind": "hessian-negativity",
        "point": _tuple_json(probe.point),
        "direction": [jmat(H) for H in probe.direction],
        "h": jvec(h),
        "quadratic_value": float(np.real(h.conj() @ hess @ h)),
        "lambda_min": float(probe.lambda_min),
        "margin": float(wit.margin),
    }


def _serialize_doubling_witness(wit):
    return {
        "kind": "doubled-point",
        "point": _tuple_json(wit.point),
        "direction": [jmat(H) for H in wit.direction],
        "h": jvec(wit.h),
        "quadratic_value": float(wit.value),
        "bad_lambda": float(wit.bad_lambda),
        "margin": float(wit.margin),
    }


def _serialize_midpoint_witness(wit, p):
    return {
        "kind": "midpoint",
        "A": [jmat(M) for M in wit.A],
        "X1": [jmat(M) for M in wit.X1],
        "X2": [jmat(M) for M in wit.X2],
        "lambda_min": float(wit.lambda_min),
        "gap_lambda_min": float(np.linalg.eigvalsh(wit.gap(p))[0]),
    }


def _partial_scan_chunk(payload):
    """One size of the region Hessian scan; module level for pickling."""
    (rjson, region_name, size, samples, seed, tol_psd, tol_inv, scale) \
        = payload
    R = realize.realization_from_json(rjson)
    frame = realize.range_t_frame(R)
    cfg = AnalysisConfig(tol_psd=tol_psd, tol_inv=tol_inv, scale=scale)
    region = region_predicate(region_name, R, frame, cfg)
    rng = np.random.default_rng(seed)
    try:
        verdict = partialcvx.convexity_verdict(
            R, region=region, sizes=(size,), samples=samples, rng=rng,
            tol=tol_psd, scale=scale)
    except partialcvx.RegionEmpty:
        return {"size": size, "empty": True}
    out = {"size": size, "empty": False}
    if verdict.is_witness:
        out["witness"] = _serialize_hessian_witness(verdict)
    else:
        out.update(samples=verdict.samples,
                   min_lambda=float(verdict.min_lambda),
                   midpoint_pairs=verdict.midpoint_pairs,
                   midpoint_violations=verdict.midpoint_violations)
    return out


def _run_chunks(fn, payloads, workers):
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def _ensure_smr(R, notes):
    if not R.minimal:
        R = realize.minimize(R)
        notes.append("minimized input realization")
    if not R.symmetric:
        R = realize.symmetrize(R)
        notes.append("symmetrized input realization")
    return R


def cmd_partial(args):
    cfg = config_from_args(args)
    kind, obj = load_input(args.input)
    report = new_report("partial", cfg)
    results = report["results"]
    notes = []
    negative = False

    if kind == "poly":
        p = obj
        results["input"] = {"kind": "polynomial",
                            "coefficients": _poly_json(p)}
        t0 = time.monotonic()
        try:
            pb = butterfly.poly_butterfly(p)
            results["butterfly_poly"] = {
                "k": pb.k,
                "ell": _poly_json(pb.ell),
                "w": _poly_json(pb.w),
                "fbar": _poly_json(pb.fbar),
                "w_psd_at_zero": bool(pb.psd_at_zero),
                "time_s": time.monotonic() - t0,
            }
            R = pb.realization
        except butterfly.NotConvexible as exc:
            entry = {"message": str(exc), "time_s": time.monotonic() - t0}
            if exc.witness is not None:
                entry["witness"] = _serialize_midpoint_witness(exc.witness, p)
                negative = True
            results["not_convexible"] = entry
            R = realize.symmetrize(realize.minimize(realize.linearize_poly(p)))
        except (butterfly.NotApplicable, butterfly.KebabError) as exc:
            results["butterfly_poly"] = {"error": str(exc)}
            R = realize.symmetrize(realize.minimize(realize.linearize_poly(p)))
    else:
        R = _ensure_smr(obj, notes)
        results["input"] = {"kind": "realization", "e": R.e,
                            "classes": {"a": R.h, "x": R.g}}

    frame = realize.range_t_frame(R)
    rjson = realize.realization_to_json(R)

    # Hessian scan over the configured region, one chunk per size
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.sizes) + 1)
    payloads = [(rjson, cfg.region, int(s), cfg.samples, seeds[i],
                 cfg.tol_psd, cfg.tol_inv, cfg.scale)
                for i, s in enumerate(cfg.sizes)]
    t0 = time.monotonic()
    chunks = _run_chunks(_partial_scan_chunk, payloads, cfg.workers)
    scan = {"region": cfg.region if cfg.region != "default" else "dom-plus",
            "per_size": chunks, "time_s": time.monotonic() - t0}
    results["hessian_scan"] = scan
    for chunk in chunks:
        if "witness" in chunk:
            negative = True

    # search dom for points where the localizing matrix goes indefinite;
    # a doubled-point witness there shows convexity stops at the PSD
    # region (sharpness), it does not contradict the region verdict
    t0 = time.monotonic()
    neg_entry = {"checked": 0, "indefinite_points": 0}
    rng = np.random.default_rng(seeds[-1])
    dom_region = region_predicate("dom", R, frame, cfg)
    for n in cfg.sizes:
        for _ in range(cfg.samples):
            t = partialcvx._sample_in_region(R, dom_region, int(n),
                                             cfg.scale, rng, max_attempts=50)
            if t is None:
                continue
            neg_entry["checked"] += 1
            lam = float(np.linalg.eigvalsh(realize.r_T(R, t, frame))[0])
            if lam < -1e-3:
                neg_entry["indefinite_points"] += 1
                if "sharpness_witness" not in neg_entry:
                    try:
                        wit = partialcvx.negativity_witness(R, t, rng=rng)
                        neg_entry["sharpness_witness"] = \
                            _serialize_doubling_witness(wit)
                    except partialcvx.SpanFailure as exc:
                        neg_entry["span_failure"] = str(exc)
    neg_entry["time_s"] = time.monotonic() - t0
    results["localizing_scan"] = neg_entry

    if kind == "realization" or "butterfly_poly" in results:
        t0 = time.monotonic()
        try:
            cert = butterfly.butterfly_build(R)
            results["butterfly"] = {
                "k": frame.k,
                "sqrt_domain_at_zero": bool(cert.in_domain_item4(
                    HermTuple(1, tuple(np.zeros((1, 1)) for _ in range(R.h)),
                              tuple(np.zeros((1, 1))
                                    for _ in range(R.g))))),
                "time_s": time.monotonic() - t0,
            }
        except (butterfly.NotApplicable, butterfly.KebabError,
                realize.NotInDomain) as exc:
            results["butterfly"] = {"error": str(exc)}

    if notes:
        results["notes"] = notes
    emit_report(report, cfg.out)
    if negative:
        return EXIT_NEGATIVE
    empty = all(c.get("empty") for c in chunks)
    return EXIT_INCONCLUSIVE if empty else EXIT_OK


# ---------------------------------------------------------------------------
# xy convexity

def _xy_scan_chunk(payload):
    coeff_pairs, size, samples, seed, scale, tol = payload
    p = xycvx.support_screen(xycvx.from_coeffs(dict(coeff_pairs)))
    rng = np.random.default_rng(seed)
    ev = xycvx.middle_matrix_psd_scan(p, sizes=(size,), samples=samples,
                                      rng=rng, scale=scale, tol=tol)
    if ev.is_witness:
        return {"size": list(size), "witness": {
            "delta0": jmat(ev.delta0), "delta1": jmat(ev.delta1),
            "beta1": jmat(ev.beta1), "beta2": jmat(ev.beta2),
            "lambda_min": float(ev.lambda_min), "vector": jvec(ev.vector)}}
    return {"size": list(size), "inputs": ev.samples,
            "min_lambda": float(ev.min_lambda)}


def _poly_coeff_pairs(p):
    out = []
    for w in p.words():
        key = "".join("x" if i == 0 else "y" for i in w)
        c = p.scalar_coeff(w)
        out.append((key if key else "", complex(c)))
    return out


def cmd_xy(args):
    cfg = config_from_args(args)
    p = load_poly(args.poly)
    report = new_report("xy", cfg)
    results = report["results"]
    try:
        scr = xycvx.support_screen(p)
    except (ContextError, ShapeError, SymmetryError) as exc:
        raise InputError(str(exc))
    if not scr.accepted:
        results["screen"] = {"accepted": False,
                             "rejected_monomial": scr.monomial,
                             "reason": scr.reason}
        emit_report(report, cfg.out)
        return EXIT_NEGATIVE
    results["screen"] = {"accepted": True}
    pl = scr

    coeff_pairs = _poly_coeff_pairs(pl.poly)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.sizes) + 1)
    payloads = [(coeff_pairs, (int(s), int(s)), cfg.samples, seeds[i],
                 cfg.scale, cfg.tol_psd)
                for i, s in enumerate(cfg.sizes)]
    t0 = time.monotonic()
    chunks = _run_chunks(_xy_scan_chunk, payloads, cfg.workers)
    scan = {"per_size": chunks, "time_s": time.monotonic() - t0}
    results["middle_matrix_scan"] = scan

    witness_chunk = next((c for c in chunks if "witness" in c), None)
    if witness_chunk is not None:
        w = witness_chunk["witness"]
        wit = xycvx.MxyWitness(junmat(w["delta0"]), junmat(w["delta1"]),
                               junmat(w["beta1"]), junmat(w["beta2"]),
                               w["lambda_min"],
                               np.array([complex(a, b)
                                         for a, b in w["vector"]]))
        pair = xycvx.mxy_witness_pair(pl, wit)
        results["pair_witness"] = {
            "X": jmat(pair.pair.X), "Y": jmat(pair.pair.Y),
            "V": jmat(pair.pair.V), "h": jvec(pair.h),
            "defect_value": float(pair.value),
        }
        emit_report(report, cfg.out)
        return EXIT_NEGATIVE

    t0 = time.monotonic()
    gram = xycvx.gram_complete_certificate(pl, tol=cfg.tol_psd)
    gram_entry = {"status": gram.status,
                  "pinned_lambda_min": float(gram.pinned_lambda_min),
                  "reduced_lambda": float(gram.reduced_lambda),
                  "time_s": time.monotonic() - t0}
    results["gram"] = gram_entry
    if not gram.is_feasible:
        # no scan witness and no certificate: report both artifacts
        results["verdict"] = "inconclusive"
        emit_report(report, cfg.out)
        return EXIT_INCONCLUSIVE
    gram_entry["pin_residual"] = float(gram.pin_residual)
    try:
        cert = xycvx.assemble_certificate(pl, gram.q0, gram.q1, gram.q2,
                                          gram.r1, tol=cfg.tol_psd)
    except xycvx.AssemblyError as exc:
        results["assembly_error"] = str(exc)
        results["verdict"] = "inconclusive"
        emit_report(report, cfg.out)
        return EXIT_INCONCLUSIVE
    rng = np.random.default_rng(seeds[-1])
    verify = xycvx.verify_certificate(pl, cert, samples=min(cfg.samples, 25),
                                      rng=rng)
    results["certificate"] = xycvx.certificate_to_json(cert)
    results["verification"] = {
        "coeff_ok": bool(verify.coeff_ok),
        "max_coeff_residual": float(verify.max_coeff_residual),
        "sampled_pairs": verify.pairs,
        "sampled_ok": bool(verify.sampled_ok),
        "min_defect_eig": float(verify.min_defect_eig),
    }
    results["verdict"] = "certified" if verify.ok else "inconclusive"
    emit_report(report, cfg.out)
    return EXIT_OK if verify.ok else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# reproduce

_REPRODUCE = {
    "intro-eval": (examples.intro_eval_summary, "expected_intro_eval.json"),
    "example-A3": (examples.example_a3_summary, "expected_example_a3.json"),
    "example-A4": (examples.example_a4_summary, "expected_example_a4.json"),
}


def _data_path(name):
    return Path(__file__).with_name("data") / name


def cmd_reproduce(args):
    if args.id not in _REPRODUCE:
        raise InputError("unknown example id %r; expected one of %s"
                         % (args.id, ", ".join(sorted(_REPRODUCE))))
    runner, fname = _REPRODUCE[args.id]
    try:
        expected = json.loads(_data_path(fname).read_text())
    except OSError as exc:
        raise InputError("missing stored summary: %s" % exc)
    actual = runner()
    match = json.dumps(actual, sort_keys=True) \
        == json.dumps(expected, sort_keys=True)
    report = {"tool": {"name": "ncconvex", "version": __version__},
              "command": "reproduce", "id": args.id,
              "match": match, "expected": expected, "actual": actual}
    if args.out:
        emit_report(report, args.out)
    if match:
        print("%s: ok" % args.id)
        return EXIT_OK
    import difflib
    exp_text = json.dumps(expected, indent=2, sort_keys=True).splitlines()
    act_text = json.dumps(actual, indent=2, sort_keys=True).splitlines()
    for line in difflib.unified_diff(exp_text, act_text,
                                     fromfile="expected", tofile="actual",
                                     lineterm=""):
        print(line)
    return EXIT_NEGATIVE


# ---------------------------------------------------------------------------
# parser

def _add_config_flags(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--sizes", default="1,2,3",
                     help="comma separated matrix sizes")
    sub.add_argument("--samples", type=int, default=30,
                     help="samples per size")
    sub.add_argument("--tol-psd", dest="tol_psd", type=float, default=1e-8)
    sub.add_argument("--tol-inv", dest="tol_inv", type=float, default=1e-10)
    sub.add_argument("--tol-aff", dest="tol_aff", type=float, default=1e-9)
    sub.add_argument("--region", default="default",
                     help="dom, dom-plus, kebab, kebab-plus, or ball:RADIUS")
    sub.add_argument("--scale", type=float, default=0.6,
                     help="sampling scale for matrix entries")
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--out", default=None, help="write the JSON report here")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ncconvex",
        description="convexity analysis for nc polynomials and rationals")
    parser.add_argument("--version", action="version",
                        version="ncconvex %s" % __version__)
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("eval", help="evaluate a polynomial at a tuple")
    s.add_argument("poly", help="polynomial text file")
    s.add_argument("tuple", help="JSON tuple file {n, A: [...], X: [...]}")
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_eval)

    s = subs.add_parser("partial",
                        help="convexity in the designated letters")
    s.add_argument("input", help="polynomial text or realization JSON")
    _add_config_flags(s)
    s.set_defaults(fn=cmd_partial)

    s = subs.add_parser("xy", help="convexity in x and y separately")
    s.add_argument("poly", help="bivariate polynomial text file")
    _add_config_flags(s)
    s.set_defaults(fn=cmd_xy)

    s = subs.add_parser("reproduce", help="rerun a pinned example study")
    s.add_argument("id", help="intro-eval, example-A3, or example-A4")
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except (ContextError, ShapeError, SymmetryError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
