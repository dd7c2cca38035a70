"""Hermite-Hadamard gaps as the Gauss-Legendre resolution doubles.

For polynomials the value should freeze once resolution covers the degree;
for exp / abs it converges geometrically / algebraically.
"""
import argparse

from boxconvex import Expression, hh_check

FUNCS = {
    "x1^4*x2^4": (2, 2),
    "x1^8*x2^2 + x2^6": (2, 2),
    "exp(x1*x2)": (2, 2),
    "abs(x1 - 0.3)^3*x2^2": (2, 2),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--which", choices=["first", "second"], default="first")
    ap.add_argument("--max-res", type=int, default=64)
    args = ap.parse_args()
    a, b = (-0.5, 0.0), (1.0, 1.5)
    for text in FUNCS:
        f = Expression.parse(text, 2)
        prev = None
        print(text)
        m = 2
        while m <= args.max_res:
            v = hh_check(f, a, b, args.which, m).value
            diff = "" if prev is None else f"{abs(v - prev):.2e}"
            print(f"  m={m:<4d} value={v: .15e}  |change|={diff}")
            prev, m = v, 2 * m


if __name__ == "__main__":
    main()
