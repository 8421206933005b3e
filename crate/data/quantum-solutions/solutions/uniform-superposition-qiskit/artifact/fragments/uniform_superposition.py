def create_uniform_superposition(qc, qubits):
    """Hadamard on every qubit gives equal amplitude to all basis states."""
    for q in qubits:
        qc.h(q)
