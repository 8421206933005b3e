"""Grover search for an assignment that satisfies a boolean formula."""

import math
import sys

from backends import get_backend
from qsim import QuantumCircuit

### PF-MARKER: initialization ###

### PF-MARKER: oracle ###


def diffuser(qc, num_qubits):
    for q in range(num_qubits):
        qc.h(q)
        qc.x(q)
    qc.mcz(list(range(num_qubits)))
    for q in range(num_qubits):
        qc.x(q)
        qc.h(q)


def grover_circuit(problem, iterations):
    n = problem.num_variables
    qc = QuantumCircuit(n)
    prepare_initial_state(qc, n)
    for _ in range(iterations):
        apply_oracle(qc, problem)
        diffuser(qc, n)
    return qc


def to_assignment(bitstring):
    # qubit 0 is the rightmost character
    return [c == "1" for c in reversed(bitstring)]


def main():
    problem = load_problem()
    backend = get_backend()
    n = problem.num_variables
    max_iterations = max(1, math.floor(math.pi / 4 * math.sqrt(2**n)))
    for iterations in range(1, max_iterations + 1):
        counts = backend.run(grover_circuit(problem, iterations), shots=1024, seed=7)
        best = max(sorted(counts), key=lambda k: counts[k])
        assignment = to_assignment(best)
        if problem.is_satisfied_by(assignment):
            print(f"backend: {backend.name}")
            print(f"iterations: {iterations}")
            print("assignment: " + " ".join(f"x{i + 1}={int(v)}" for i, v in enumerate(assignment)))
            return 0
    print("no satisfying assignment found", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
