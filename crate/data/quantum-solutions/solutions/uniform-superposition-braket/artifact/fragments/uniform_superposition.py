def create_uniform_superposition(circuit, targets):
    for q in targets:
        circuit.h(q)
    return circuit
