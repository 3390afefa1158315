"""Fold the first three turns of a random 5-turn classical game with a k-copy majority vote."""

import numpy as np

from qamlab.collapse import fold_report
from qamlab.protocol import alternating_types, table_protocol


def main():
    table = np.random.default_rng(3).random((2,) * 5)
    P = table_protocol(alternating_types(5), (1,) * 5, table)
    print(f"{'k':>2} {'p':>8} {'folded':>8} {'lower':>8} {'upper':>8}")
    for k in (1, 2, 3, 4):
        r = fold_report(P, k, table=table)
        print(f"{k:>2} {r.p_original:8.5f} {r.p_folded:8.5f} {r.bound_lower:8.5f} {r.bound_upper:8.5f}")


if __name__ == "__main__":
    main()
