"""Small statevector simulator with a QuantumCircuit-style interface.

Only the gates needed by the bundled search programs are provided. Qubit 0 is
the least significant bit of a basis index, and measured bitstrings are
printed with qubit 0 rightmost.
"""

import math
import random


class QuantumCircuit:
    def __init__(self, num_qubits):
        self.num_qubits = num_qubits
        self.ops = []

    def h(self, qubit):
        self.ops.append(("h", qubit))

    def x(self, qubit):
        self.ops.append(("x", qubit))

    def z(self, qubit):
        self.ops.append(("z", qubit))

    def mcz(self, qubits):
        self.ops.append(("mcz", tuple(qubits)))

    def phase_oracle(self, predicate):
        """Flip the phase of every basis state whose qubit values satisfy predicate."""
        self.ops.append(("oracle", predicate))


class StatevectorSimulator:
    name = "local_statevector"

    def statevector(self, circuit):
        n = circuit.num_qubits
        state = [0.0] * (1 << n)
        state[0] = 1.0
        scale = 1.0 / math.sqrt(2.0)
        for op, arg in circuit.ops:
            if op == "h":
                bit = 1 << arg
                for i in range(len(state)):
                    if not i & bit:
                        a, b = state[i], state[i | bit]
                        state[i], state[i | bit] = (a + b) * scale, (a - b) * scale
            elif op == "x":
                bit = 1 << arg
                for i in range(len(state)):
                    if not i & bit:
                        state[i], state[i | bit] = state[i | bit], state[i]
            elif op == "z":
                bit = 1 << arg
                for i in range(len(state)):
                    if i & bit:
                        state[i] = -state[i]
            elif op == "mcz":
                mask = 0
                for q in arg:
                    mask |= 1 << q
                for i in range(len(state)):
                    if i & mask == mask:
                        state[i] = -state[i]
            elif op == "oracle":
                for i in range(len(state)):
                    if arg([bool(i >> q & 1) for q in range(n)]):
                        state[i] = -state[i]
            else:
                raise ValueError(f"unsupported operation {op}")
        return state

    def run(self, circuit, shots=1024, seed=None):
        state = self.statevector(circuit)
        weights = [a * a for a in state]
        rng = random.Random(seed)
        counts = {}
        width = circuit.num_qubits
        for index in rng.choices(range(len(state)), weights=weights, k=shots):
            key = format(index, f"0{width}b")
            counts[key] = counts.get(key, 0) + 1
        return counts
