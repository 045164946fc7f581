"""Evaluate the two-variable warm-up polynomial on its pinned 2x2 point.

Prints the evaluation matrix, the hermiticity residual (the input point is
deliberately not Hermitian, so the residual is large), and the frozen summary
dict used by `ncconvex reproduce intro-eval`.
"""

import json

import numpy as np

from ncconvex import examples, ncalg


def main():
    p = examples.intro_poly()
    X1, X2 = examples.intro_matrices()
    t = ncalg.HermTuple(2, (), (X1, X2), validate=False)
    val = ncalg.eval_poly(p, t)
    print("polynomial:", ncalg.format_poly(p).replace("\n", "  ;  "))
    print("X1 =", X1.real.astype(int).tolist())
    print("X2 =", X2.real.astype(int).tolist())
    print("p(X1, X2) =")
    for row in val:
        print("   ", "  ".join(ncalg.format_complex(z) for z in row))
    print("hermiticity residual:", np.linalg.norm(val - val.conj().T, 2))
    print()
    print(json.dumps(examples.intro_eval_summary(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
