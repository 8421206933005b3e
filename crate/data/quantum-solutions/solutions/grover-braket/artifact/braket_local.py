"""Local statevector simulation with a Braket-style Circuit interface.

Measurement bitstrings list qubit 0 first, as Braket does.
"""

import math
import random
from collections import Counter


class Circuit:
    def __init__(self):
        self.instructions = []
        self.qubit_count = 0

    def _touch(self, *qubits):
        self.qubit_count = max([self.qubit_count] + [q + 1 for q in qubits])

    def h(self, target):
        self._touch(target)
        self.instructions.append(("h", target))
        return self

    def x(self, target):
        self._touch(target)
        self.instructions.append(("x", target))
        return self

    def cz_all(self, targets):
        targets = tuple(targets)
        self._touch(*targets)
        self.instructions.append(("cz_all", targets))
        return self

    def phase_flip_where(self, predicate, width):
        self._touch(width - 1)
        self.instructions.append(("flip", predicate))
        return self


class _Result:
    def __init__(self, counts):
        self.measurement_counts = Counter(counts)


class _Task:
    def __init__(self, counts):
        self._result = _Result(counts)

    def result(self):
        return self._result


class LocalSimulator:
    name = "local_statevector"

    def _evolve(self, circuit):
        n = circuit.qubit_count
        amps = [0.0] * (1 << n)
        amps[0] = 1.0
        r = 1.0 / math.sqrt(2.0)
        for kind, arg in circuit.instructions:
            if kind in ("h", "x"):
                bit = 1 << arg
                for i in range(len(amps)):
                    if i & bit:
                        continue
                    a, b = amps[i], amps[i | bit]
                    if kind == "h":
                        amps[i], amps[i | bit] = (a + b) * r, (a - b) * r
                    else:
                        amps[i], amps[i | bit] = b, a
            elif kind == "cz_all":
                mask = sum(1 << q for q in arg)
                for i in range(len(amps)):
                    if i & mask == mask:
                        amps[i] = -amps[i]
            elif kind == "flip":
                for i in range(len(amps)):
                    if arg([bool(i >> q & 1) for q in range(n)]):
                        amps[i] = -amps[i]
        return amps

    def run(self, circuit, shots=1000, seed=None):
        amps = self._evolve(circuit)
        rng = random.Random(seed)
        n = circuit.qubit_count
        sampled = rng.choices(range(len(amps)), weights=[a * a for a in amps], k=shots)
        keys = ["".join("1" if i >> q & 1 else "0" for q in range(n)) for i in sampled]
        return _Task(Counter(keys))
