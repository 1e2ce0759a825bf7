"""Exchange-pulse gate synthesis for hybrid double-quantum-dot qubits."""

from __future__ import annotations

__version__ = "0.1.0"
