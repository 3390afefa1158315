"""Replace a quantum reply by teleportation and check the acceptance probability is unchanged."""

from qamlab.collapse import teleport_transform
from qamlab.protocol import eval_with_prover, random_protocol, random_strategy


def main():
    for seed in range(5):
        P = random_protocol("qcq", (1, 1, 1), 1, 5, seed=seed)
        newP, transform = teleport_transform(P)
        S = random_strategy(P, 1, seed=100 + seed)
        a, b = eval_with_prover(P, S), eval_with_prover(newP, transform(S))
        print(f"seed {seed}: {P.signature} p = {a:.12f}   {newP.signature} p = {b:.12f}")


if __name__ == "__main__":
    main()
