"""Close-image-to-maximally-mixed verifier on a few small circuits.

For each circuit Q, d = D_min(Q, mix) and the two-turn verifier's optimal
value v should satisfy (1 - d)^2 <= v <= 1 - d^2.
"""

import numpy as np

from qamlab.metrics import OptConfig, min_output_trace_distance, mix_channel
from qamlab.protocol import optimal_value_two_turn
from qamlab.qobj import channel_of_circuit, constant_zero_circuit, identity_circuit, random_circuit
from qamlab.reductions import build_citm_verifier


def main():
    cfg = OptConfig(restarts=8, max_iters=400)
    rng = np.random.default_rng(5)
    circuits = {"identity": identity_circuit(1), "constant_zero": constant_zero_circuit(1)}
    for t in range(3):
        circuits[f"random_{t}"] = random_circuit(2, 1, 1, 6, rng)
    print(f"{'circuit':<14} {'d':>8} {'v':>8} {'lower':>8} {'upper':>8}")
    for name, Q in circuits.items():
        d = min_output_trace_distance(channel_of_circuit(Q), mix_channel(Q.q_inp, Q.q_out), cfg).value
        r = optimal_value_two_turn(build_citm_verifier(Q), cfg)
        print(f"{name:<14} {d:8.5f} {r.value:8.5f} {(1 - d) ** 2:8.5f} {1 - d * d:8.5f}")


if __name__ == "__main__":
    main()
