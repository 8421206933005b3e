"""Grover search for an assignment that satisfies a boolean formula."""

import math
import sys

from backends import get_backend
from qsim import QuantumCircuit

def create_uniform_superposition(qc, qubits):
    """Hadamard on every qubit gives equal amplitude to all basis states."""
    for q in qubits:
        qc.h(q)


def prepare_initial_state(qc, num_qubits):
    """Prepare the start state of the search register."""
    create_uniform_superposition(qc, range(num_qubits))

class CnfProblem:
    """A boolean formula in conjunctive normal form."""

    def __init__(self, num_variables, clauses):
        self.num_variables = num_variables
        self.clauses = clauses

    @classmethod
    def from_dimacs(cls, path):
        num_variables, clauses, current = 0, [], []
        with open(path) as handle:
            for line in handle:
                line = line.strip()
                if not line or line.startswith("c"):
                    continue
                if line.startswith("p"):
                    num_variables = int(line.split()[2])
                    continue
                for literal in map(int, line.split()):
                    if literal == 0:
                        clauses.append(current)
                        current = []
                    else:
                        current.append(literal)
        return cls(num_variables, clauses)

    def is_satisfied_by(self, assignment):
        return all(any(assignment[abs(l) - 1] == (l > 0) for l in clause) for clause in self.clauses)


def load_problem():
    import os

    here = os.path.dirname(os.path.abspath(__file__))
    return CnfProblem.from_dimacs(os.path.join(here, "solutions", "oracle-qiskit", "problem.cnf"))


def apply_oracle(qc, problem):
    """Phase oracle marking the satisfying assignments of the formula."""
    qc.phase_oracle(problem.is_satisfied_by)


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
