"""Sweep the Rasa check over binomial pairs on a 0.1 grid.

Prints how many (m, x, y, n) configurations hold, split by the sign of y - x,
so the orientation effect for odd n is visible.

    python scripts/rasa_sweep.py --max-m 6
"""
import argparse
import itertools
from collections import Counter

from boxconvex import binomial, rasa_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-m", type=int, default=4)
    ap.add_argument("--orders", type=int, nargs="+", default=[2, 3, 4])
    args = ap.parse_args()
    grid = [round(0.1 * k, 1) for k in range(11)]
    tally = Counter()
    for m in range(1, args.max_m + 1):
        for x, y in itertools.product(grid, grid):
            side = "x<y" if x < y else ("x=y" if x == y else "x>y")
            for q in args.orders:
                ok = rasa_check([binomial(m, x)], [binomial(m, y)], (q,)).holds
                tally[q, side, ok] += 1
    print(f"{'n':>3} {'side':>5} {'holds':>7} {'fails':>7}")
    for q in args.orders:
        for side in ("x<y", "x=y", "x>y"):
            print(f"{q:>3} {side:>5} {tally[q, side, True]:>7} {tally[q, side, False]:>7}")


if __name__ == "__main__":
    main()
