"""Quaternion models of qubits, measurement and circuit learning."""

__version__ = "0.1.0"
