"""Device selection for the Braket flavored programs."""

import os
import sys


def get_device():
    name = os.environ.get("PF_QUANTUM_BACKEND", "aws")
    if name == "local_statevector":
        from braket_local import LocalSimulator

        return LocalSimulator()
    if name == "aws":
        try:
            from braket.aws import AwsDevice
        except ImportError:
            sys.exit(
                "the aws backend needs amazon-braket-sdk; "
                "set PF_QUANTUM_BACKEND=local_statevector to simulate locally"
            )
        return AwsDevice(os.environ["BRAKET_DEVICE_ARN"])
    sys.exit(f"unknown backend {name!r}")
