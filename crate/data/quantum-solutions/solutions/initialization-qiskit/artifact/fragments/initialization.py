### PF-MARKER: uniform-superposition ###


def prepare_initial_state(qc, num_qubits):
    """Prepare the start state of the search register."""
    create_uniform_superposition(qc, range(num_qubits))
