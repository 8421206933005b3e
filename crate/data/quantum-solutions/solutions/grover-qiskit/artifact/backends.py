"""Backend selection for the Qiskit flavored programs."""

import os
import sys


class IbmqBackend:
    name = "ibmq"

    def __init__(self):
        try:
            from qiskit import QuantumCircuit as QiskitCircuit, transpile
            from qiskit.circuit.library import Diagonal, ZGate
            from qiskit_ibm_runtime import QiskitRuntimeService, SamplerV2
        except ImportError:
            sys.exit(
                "the ibmq backend needs qiskit and qiskit-ibm-runtime; "
                "set PF_QUANTUM_BACKEND=local_statevector to simulate locally"
            )
        self._circuit = QiskitCircuit
        self._transpile = transpile
        self._diagonal = Diagonal
        self._z = ZGate
        service = QiskitRuntimeService(channel="ibm_quantum", token=os.environ.get("IBMQ_TOKEN"))
        self._backend = service.least_busy(operational=True, simulator=False)
        self._sampler = SamplerV2(self._backend)

    def _convert(self, circuit):
        n = circuit.num_qubits
        qc = self._circuit(n)
        for op, arg in circuit.ops:
            if op in ("h", "x", "z"):
                getattr(qc, op)(arg)
            elif op == "mcz":
                qc.append(self._z().control(len(arg) - 1), list(arg))
            elif op == "oracle":
                phases = [-1 if arg([bool(i >> q & 1) for q in range(n)]) else 1 for i in range(1 << n)]
                qc.append(self._diagonal(phases), list(range(n)))
        qc.measure_all()
        return self._transpile(qc, self._backend)

    def run(self, circuit, shots=1024, seed=None):
        job = self._sampler.run([self._convert(circuit)], shots=shots)
        return job.result()[0].data.meas.get_counts()


def get_backend():
    name = os.environ.get("PF_QUANTUM_BACKEND", "ibmq")
    if name == "local_statevector":
        from qsim import StatevectorSimulator

        return StatevectorSimulator()
    if name == "ibmq":
        return IbmqBackend()
    sys.exit(f"unknown backend {name!r}")
