"""Tabulate c_g(x) at decade checkpoints for the built-in multiplicative functions."""
import argparse

from qslab.sieve import BUILTIN_G, wirsing_partial


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--x", type=int, default=10**6)
    a = ap.parse_args()
    for name in BUILTIN_G:
        r = wirsing_partial(name, a.x)
        print(f"{name}: c_g = {r.c_g:.6f}, stabilizing = {r.stabilizing}")
        for row in r.checkpoints:
            print(f"    x = {row[0]:>9}  sum = {int(row[1]):<14}  c_g = {row[3]:.6f}")


if __name__ == "__main__":
    main()
