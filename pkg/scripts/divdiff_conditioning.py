"""How far apart do the nested and expanded divided differences drift?

Reports the worst gap in two normalisations: against the largest term of the
expanded sum (the scale the certifier uses) and against |value|. The second
blows up when nodes cluster, which is why the first one is the meaningful one.
"""
import argparse

import numpy as np

from boxconvex import Box, Builtin, Expression, MultiIndex
from boxconvex.divdiff import batch_expanded, batch_nested, sample_random


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--batches", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'d':>2} {'n':>12} {'sep':>7} {'vs scale':>10} {'vs |value|':>11}")
    for sep in (1e-1, 1e-2, 1e-3):
        for d in (1, 2, 3):
            f = Builtin("exp_sum", tuple(np.linspace(0.5, 1.3, d)), d)
            g = Expression.parse("*".join(f"exp(0.7*x{i})" for i in range(1, d + 1)), d)
            n = MultiIndex((3,) * d)
            worst_s = worst_v = 0.0
            for _ in range(args.batches):
                nodes = sample_random(rng, Box.cube(-1.0, 1.5, d), n, 20, separation=sep)
                for h in (f, g):
                    a = batch_nested(h, nodes)
                    b, scale = batch_expanded(h, nodes)
                    worst_s = max(worst_s, float(np.max(np.abs(a - b) / scale)))
                    worst_v = max(worst_v, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))
            print(f"{d:>2} {str(tuple(n)):>12} {sep:>7.0e} {worst_s:>10.1e} {worst_v:>11.1e}")


if __name__ == "__main__":
    main()
