"""Compare jet derivatives with central finite differences over a range of steps.

The error should fall like h^2 until roundoff takes over near h ~ 1e-5.
"""

import argparse

import numpy as np

from harmricci.expr import FieldEnv, eval_float, eval_jet, parse
from harmricci.jet import JetConfig

CASES = [
    ("sin(x1)*exp(x2) + x3^3", (0.3, -0.2, 0.7)),
    ("log(1 + x1^2) / (2 + cos(x2*x3))", (0.5, 1.1, -0.4)),
    ("sqrt(1 + x1^2 + x2^2) * atan(x3)", (-0.8, 0.25, 0.6)),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    args = ap.parse_args()

    env = FieldEnv(3)
    d = np.array([0.6, -0.48, 0.64])
    print("h".rjust(8) + "".join(f"  case {i}".rjust(12) for i in range(len(CASES))))
    rows = {h: [] for h in args.steps}
    for text, p in CASES:
        node = parse(text, env)
        jet = eval_jet(node, p, JetConfig(3, 1))
        exact = sum(d[i] * jet.derivative(tuple(int(i == j) for j in range(3))) for i in range(3))
        for h in args.steps:
            fd = (eval_float(node, np.add(p, h * d)) - eval_float(node, np.subtract(p, h * d))) / (2 * h)
            rows[h].append(abs(fd - exact))
    for h, errs in rows.items():
        print(f"{h:8.0e}" + "".join(f"{e:12.2e}" for e in errs))
    hs = np.array(args.steps[:3])
    for i in range(len(CASES)):
        slope = np.polyfit(np.log(hs), np.log([rows[h][i] for h in hs]), 1)[0]
        print(f"case {i} slope over the three largest steps: {slope:.3f}")


if __name__ == "__main__":
    main()
