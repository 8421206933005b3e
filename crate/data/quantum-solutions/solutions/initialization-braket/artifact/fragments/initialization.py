### PF-MARKER: uniform-superposition ###


def prepare_initial_state(circuit, width):
    return create_uniform_superposition(circuit, range(width))
