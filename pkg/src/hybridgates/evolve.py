"""Square-pulse time evolution, gate metrics and pulse-sequence files.

Durations ``tau`` are in units of ``h / J^max`` and couplings in units of
``J^max``, so a step propagates with ``exp(-2j * pi * H * tau)``.  With that
convention a single pair at ``J = 1`` for ``tau = 1/2`` performs a SWAP.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Mapping, Sequence

import numpy as np

from .effective import (
    DEFAULT_J12,
    ExchangeCouplings,
    Topology,
    get_topology,
    heisenberg_hamiltonian,
)
from .spin_space import (
    LogicalFrame,
    exchange_operator,
    logical_frame_single,
    logical_frame_two,
    project,
)

# Planck constant in ueV * ns
PLANCK_UEV_NS = 4.135667696


@dataclass(frozen=True)
class PulseStep:
    tau: float
    couplings: ExchangeCouplings

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"step duration must be a finite value >= 0, got {self.tau}")
        if not self.couplings.tunable_within(0.0, 1.0):
            raise ValueError(
                "tunable couplings must lie in [0, 1] (units of J^max), got "
                f"{ {n: self.couplings[n] for n in self.couplings.topology.tunable} }"
            )

    @property
    def topology(self) -> Topology:
        return self.couplings.topology


@dataclass(frozen=True)
class PulseSequence:
    topology: Topology
    steps: tuple[PulseStep, ...]
    j12_frozen: float = DEFAULT_J12
    gate: str | None = None
    fidelity: float | None = None
    seed: int | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "topology", get_topology(self.topology))
        object.__setattr__(self, "steps", tuple(self.steps))
        for k, step in enumerate(self.steps):
            if step.topology is not self.topology:
                raise ValueError(
                    f"step {k} uses topology {step.topology.name}, sequence is {self.topology.name}"
                )
            for name in self.topology.frozen:
                if step.couplings[name] != self.j12_frozen:
                    raise ValueError(
                        f"step {k} has {name}={step.couplings[name]}, frozen value is {self.j12_frozen}"
                    )

    @property
    def total_tau(self) -> float:
        return float(sum(s.tau for s in self.steps))

    @classmethod
    def from_arrays(
        cls,
        topology: str | Topology,
        taus: Sequence[float],
        couplings: np.ndarray,
        j12: float = DEFAULT_J12,
        **kw,
    ) -> PulseSequence:
        """Build from durations and an (n_steps, n_tunable) coupling array."""
        topo = get_topology(topology)
        couplings = np.asarray(couplings, dtype=float).reshape(len(taus), len(topo.tunable))
        steps = tuple(
            PulseStep(
                float(t),
                ExchangeCouplings.make(topo, j12, **dict(zip(topo.tunable, map(float, row)))),
            )
            for t, row in zip(taus, couplings)
        )
        return cls(topo, steps, j12, **kw)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "topology": self.topology.name,
            "j12_frozen": self.j12_frozen,
            "steps": [
                {"tau": s.tau, **{n: s.couplings[n] for n in self.topology.tunable}}
                for s in self.steps
            ],
            "gate": self.gate,
            "fidelity": self.fidelity,
            "seed": self.seed,
        }
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PulseSequence:
        allowed = {"topology", "j12_frozen", "steps", "gate", "fidelity", "seed", "metadata"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown sequence fields {sorted(unknown)}")
        if "topology" not in data or "steps" not in data:
            raise ValueError("a sequence needs 'topology' and 'steps'")
        topo = get_topology(data["topology"])
        j12 = float(data.get("j12_frozen", DEFAULT_J12))
        raw = data["steps"]
        if not isinstance(raw, list) or not raw:
            raise ValueError("'steps' must be a non-empty list")
        step_fields = {"tau", *topo.tunable}
        steps = []
        for k, item in enumerate(raw):
            if not isinstance(item, Mapping):
                raise ValueError(f"step {k} is not an object")
            bad = set(item) - step_fields
            if bad:
                raise ValueError(
                    f"step {k} has fields {sorted(bad)} not valid for topology {topo.name}"
                )
            if "tau" not in item:
                raise ValueError(f"step {k} has no 'tau'")
            tunable = {n: float(item.get(n, 0.0)) for n in topo.tunable}
            steps.append(PulseStep(float(item["tau"]), ExchangeCouplings.make(topo, j12, **tunable)))
        return cls(
            topo,
            tuple(steps),
            j12,
            gate=data.get("gate"),
            fidelity=data.get("fidelity"),
            seed=data.get("seed"),
            metadata=dict(data.get("metadata") or {}),
        )

    @classmethod
    def from_json(cls, text: str) -> PulseSequence:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class GateTarget:
    name: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
            raise ValueError(f"target must be a 2x2 or 4x4 matrix, got shape {m.shape}")
        if np.abs(m.conj().T @ m - np.eye(len(m))).max() > 1e-12:
            raise ValueError(f"target {self.name!r} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return len(self.matrix)


def standard_target(name: str) -> GateTarget:
    s = 1 / np.sqrt(2)
    gates = {
        "identity": np.eye(2),
        "hadamard": [[s, s], [s, -s]],
        "pi8": [[1, 0], [0, np.exp(1j * np.pi / 4)]],
        "identity2": np.eye(4),
        "cnot": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    }
    try:
        return GateTarget(name, np.array(gates[name], dtype=complex))
    except KeyError:
        raise ValueError(f"unknown gate {name!r}; expected one of {sorted(gates)}") from None


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    leakage: float
    total_tau: float | None = None
    physical_time_ns: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "fidelity": self.fidelity,
            "leakage": self.leakage,
            "total_tau": self.total_tau,
            "physical_time_ns": self.physical_time_ns,
        }


def frame_for(topology: str | Topology) -> LogicalFrame:
    topo = get_topology(topology)
    return logical_frame_single() if topo.logical_dim == 2 else logical_frame_two()


def hermitian_expm(H: np.ndarray, tau: float) -> np.ndarray:
    """exp(-2j pi H tau) for Hermitian ``H`` via its eigendecomposition."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-2j * np.pi * w * tau)) @ V.conj().T


def step_unitary(step: PulseStep) -> np.ndarray:
    return hermitian_expm(heisenberg_hamiltonian(step.couplings), step.tau)


def sequence_unitary(seq: PulseSequence) -> np.ndarray:
    """U_n ... U_1, the first step acting first."""
    dim = seq.topology.register.dim
    U = np.eye(dim, dtype=complex)
    for step in seq.steps:
        if step.topology is not seq.topology:
            raise ValueError("all steps must share the sequence topology")
        U = step_unitary(step) @ U
    return U


def _clamp(x: float, snap: float = 1e-12) -> float:
    # values within rounding distance of a bound are reported as the bound
    if abs(x) <= snap:
        return 0.0
    if abs(x - 1) <= snap:
        return 1.0
    return float(min(max(x, 0.0), 1.0))


def block_metrics(M: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    """(fidelity, leakage) of a projected logical block against a target."""
    d = len(target)
    F = abs(np.trace(target.conj().T @ M)) / d
    L = 1.0 - np.real(np.trace(M.conj().T @ M)) / d
    return _clamp(F), _clamp(L)


def gate_fidelity(U: np.ndarray, frame: LogicalFrame, target: GateTarget) -> FidelityReport:
    """Global-phase-invariant fidelity |Tr(T^dag M)|/d and leakage 1 - Tr(M^dag M)/d."""
    if target.d != frame.d:
        raise ValueError(f"target is {target.d}-dimensional but the frame holds {frame.d} states")
    F, L = block_metrics(project(U, frame), target.matrix)
    return FidelityReport(F, L)


def duration_to_ns(tau: float, jmax_ueV: float) -> float:
    """Physical time of ``tau`` units of h/J^max."""
    if not jmax_ueV > 0:
        raise ValueError(f"J^max must be positive, got {jmax_ueV}")
    return tau * PLANCK_UEV_NS / jmax_ueV


def verify(
    seq: PulseSequence, target: GateTarget, jmax_ueV: float | None = None
) -> FidelityReport:
    """Recompute fidelity, leakage and duration of a sequence from scratch."""
    rep = gate_fidelity(sequence_unitary(seq), frame_for(seq.topology), target)
    ns = duration_to_ns(seq.total_tau, jmax_ueV) if jmax_ueV is not None else None
    return FidelityReport(rep.fidelity, rep.leakage, seq.total_tau, ns)


class SectorPropagator:
    """Fast batched propagation restricted to the frame's S_z sector.

    Exchange operators are real symmetric, so each step needs one real
    eigendecomposition of a 3x3 (single qubit) or 15x15 (pair) matrix.
    """

    def __init__(self, topology: str | Topology):
        self.topology = get_topology(topology)
        frame = frame_for(self.topology)
        idx = frame.sector_indices()
        reg = self.topology.register
        ops = {
            name: exchange_operator(reg, *pair)[np.ix_(idx, idx)].real
            for name, pair in self.topology.pairs.items()
        }
        self.tunable_ops = np.array([ops[n] for n in self.topology.tunable])
        self.frozen_op = sum(ops[n] for n in self.topology.frozen)
        self.basis = frame.basis[idx, :]
        self.dim = len(idx)

    def hamiltonians(self, couplings: np.ndarray, j12: float) -> np.ndarray:
        """Generators for an (..., n_tunable) coupling array."""
        return np.tensordot(couplings, self.tunable_ops, axes=1) + j12 * self.frozen_op

    def unitaries(self, taus: np.ndarray, couplings: np.ndarray, j12: float) -> np.ndarray:
        """Sequence propagators for batches: taus (B, n), couplings (B, n, k) -> (B, m, m)."""
        taus = np.asarray(taus, dtype=float)
        w, V = np.linalg.eigh(self.hamiltonians(couplings, j12))
        phases = np.exp(-2j * np.pi * w * taus[..., None])
        steps = (V * phases[..., None, :]) @ np.swapaxes(V, -1, -2)
        U = steps[:, 0]
        for k in range(1, steps.shape[1]):
            U = steps[:, k] @ U
        return U

    def metrics(
        self, taus: np.ndarray, couplings: np.ndarray, j12: float, target: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Batched (fidelity, leakage) arrays."""
        U = self.unitaries(taus, couplings, j12)
        M = self.basis.conj().T @ U @ self.basis
        d = len(target)
        F = np.abs(np.einsum("ij,bij->b", target.conj(), M)) / d
        L = 1.0 - np.einsum("bij,bij->b", M.conj(), M).real / d
        return np.clip(F, 0.0, 1.0), np.clip(L, 0.0, 1.0)


@lru_cache(maxsize=None)
def sector_propagator(name: str) -> SectorPropagator:
    return SectorPropagator(name)
