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
    return CnfProblem.from_dimacs(os.path.join(here, "solutions", "oracle-braket", "problem.cnf"))


def apply_oracle(circuit, problem):
    """Phase oracle marking the satisfying assignments of the formula."""
    return circuit.phase_flip_where(problem.is_satisfied_by, problem.num_variables)
