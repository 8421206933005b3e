"""Grover search for an assignment that satisfies a boolean formula (Braket)."""

import math
import sys

from braket_local import Circuit
from devices import get_device

### PF-MARKER: initialization ###

### PF-MARKER: oracle ###


def diffusion(circuit, width):
    for q in range(width):
        circuit.h(q).x(q)
    circuit.cz_all(range(width))
    for q in range(width):
        circuit.x(q).h(q)
    return circuit


def build_search(problem, rounds):
    width = problem.num_variables
    circuit = prepare_initial_state(Circuit(), width)
    for _ in range(rounds):
        apply_oracle(circuit, problem)
        diffusion(circuit, width)
    return circuit


def main():
    problem = load_problem()
    device = get_device()
    width = problem.num_variables
    limit = max(1, math.floor(math.pi / 4 * math.sqrt(2**width)))
    for rounds in range(1, limit + 1):
        counts = device.run(build_search(problem, rounds), shots=1000, seed=11).result().measurement_counts
        best = max(sorted(counts), key=lambda k: counts[k])
        assignment = [c == "1" for c in best]
        if problem.is_satisfied_by(assignment):
            print(f"backend: {getattr(device, 'name', 'aws')}")
            print(f"iterations: {rounds}")
            print("assignment: " + " ".join(f"x{i + 1}={int(v)}" for i, v in enumerate(assignment)))
            return 0
    print("no satisfying assignment found", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
