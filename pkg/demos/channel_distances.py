"""Minimum output trace distance and maximum output fidelity of two noisy channels.

Prints D_min and F_max for k parallel copies next to the bounds they obey.
"""

import math

from qamlab.derive import channel_pair
from qamlab.metrics import min_output_trace_distance
from qamlab.oracle import sdp_max_output_fidelity


def main():
    Phi, Psi = channel_pair(42)
    d1 = min_output_trace_distance(Phi, Psi).value
    f1 = sdp_max_output_fidelity(Phi, Psi)
    print(f"{'k':>2} {'D_min':>10} {'lower':>10} {'upper':>10} {'F_max':>10} {'F_1^k':>10}")
    for k in (1, 2, 3):
        r = min_output_trace_distance(Phi.power(k), Psi.power(k))
        f = sdp_max_output_fidelity(Phi.power(k), Psi.power(k))
        lo = 1 - (1 - d1 * d1) ** (k / 2)
        print(f"{k:>2} {r.value:10.6f} {lo:10.6f} {k * d1:10.6f} {f:10.6f} {f1 ** k:10.6f}")
    print(f"single copy: 1 - F = {1 - f1:.6f} <= D = {d1:.6f} <= sqrt(1 - F^2) = {math.sqrt(1 - f1 * f1):.6f}")


if __name__ == "__main__":
    main()
