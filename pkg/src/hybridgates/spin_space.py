"""Spin-1/2 operators, exchange couplings and the logical bases of hybrid qubits.

Basis index ``i`` of an ``n``-spin register stores spin ``k`` (1-based position in
the label list) in bit ``k - 1``; a set bit means spin up.  Spin operators are
dimensionless, ``S = sigma / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SINGLE_LABELS = ("1", "2", "3")
PAIR_LABELS = ("1a", "2a", "3a", "1b", "2b", "3b")


@dataclass(frozen=True)
class SpinRegister:
    """An ordered set of spin-1/2 labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("a spin register needs at least one spin")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate spin labels in {self.labels}")

    @classmethod
    def single(cls) -> SpinRegister:
        return cls(SINGLE_LABELS)

    @classmethod
    def pair(cls) -> SpinRegister:
        return cls(PAIR_LABELS)

    @classmethod
    def of_size(cls, n: int) -> SpinRegister:
        return cls(tuple(str(k) for k in range(1, n + 1)))

    @property
    def n_spins(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown spin label {label!r}; register has {self.labels}") from None


@dataclass(frozen=True, eq=False)
class LogicalFrame:
    """Orthonormal logical vectors plus the leakage complement of their S_z sector.

    ``basis`` and ``leak_basis`` are stored as columns.
    """

    register: SpinRegister
    basis: np.ndarray
    leak_basis: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def sector_indices(self) -> np.ndarray:
        """Computational-basis indices on which the frame and its complement live."""
        support = np.abs(np.hstack([self.basis, self.leak_basis])).sum(axis=1) > 0
        return np.flatnonzero(support)


_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
# bit value 1 is spin up, so |down> = e_0 and |up> = e_1
_SZ = np.array([[-1, 0], [0, 1]], dtype=complex) / 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _embed(single: np.ndarray, k: int, n: int) -> np.ndarray:
    # spin k sits in bit k, which is the (n-1-k)-th factor of a big-endian kron
    out = np.eye(1, dtype=complex)
    for pos in reversed(range(n)):
        out = np.kron(out, single if pos == k else np.eye(2))
    return out


@lru_cache(maxsize=None)
def _spin_components(n: int) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
    return tuple(
        tuple(_frozen(_embed(s, k, n)) for s in (_SX, _SY, _SZ)) for k in range(n)
    )


def spin_operators(reg: SpinRegister, label: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S_x, S_y, S_z) of one spin, embedded in the full register."""
    return _spin_components(reg.n_spins)[reg.index(label)]


@lru_cache(maxsize=None)
def _exchange(n: int, i: int, j: int) -> np.ndarray:
    comps = _spin_components(n)
    out = sum(a @ b for a, b in zip(comps[i], comps[j]))
    return _frozen(out)


def exchange_operator(reg: SpinRegister, i: str, j: str) -> np.ndarray:
    """S_i . S_j on the full ``2**n`` space (+1/4 on triplets, -3/4 on the singlet)."""
    a, b = reg.index(i), reg.index(j)
    if a == b:
        raise ValueError(f"exchange needs two distinct spins, got {i!r} twice")
    return _exchange(reg.n_spins, min(a, b), max(a, b))


@lru_cache(maxsize=None)
def _total_spin(n: int) -> tuple[np.ndarray, np.ndarray]:
    comps = _spin_components(n)
    totals = [sum(c[axis] for c in comps) for axis in range(3)]
    s2 = sum(t @ t for t in totals)
    return _frozen(s2), _frozen(totals[2].copy())


def total_spin_operators(reg: SpinRegister) -> tuple[np.ndarray, np.ndarray]:
    """Total S^2 and S_z of the register."""
    return _total_spin(reg.n_spins)


def sz_values(n: int) -> np.ndarray:
    """Diagonal of total S_z for ``n`` spins, indexed by basis state."""
    idx = np.arange(2**n)
    ups = np.array([bin(i).count("1") for i in idx])
    return ups - n / 2


def sz_sector(n: int, sz: float) -> np.ndarray:
    return np.flatnonzero(np.isclose(sz_values(n), sz))


def _ket(bits: dict[int, int], n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[sum(b << k for k, b in bits.items())] = 1.0
    return v


def _qubit_vectors(reg: SpinRegister, l1: str, l2: str, l3: str) -> tuple[np.ndarray, np.ndarray]:
    n = reg.n_spins
    a, b, c = reg.index(l1), reg.index(l2), reg.index(l3)

    def k(s1, s2, s3):
        return _ket({a: s1, b: s2, c: s3}, n)

    # pair (1,2) states, third spin down unless stated; 1 = up
    singlet = (k(1, 0, 0) - k(0, 1, 0)) / np.sqrt(2)
    t0_down = (k(1, 0, 0) + k(0, 1, 0)) / np.sqrt(2)
    tm_up = k(0, 0, 1)
    zero = singlet
    one = np.sqrt(1 / 3) * t0_down - np.sqrt(2 / 3) * tm_up
    return zero, one


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def _complement(basis: np.ndarray, sector: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal complement of ``basis`` inside the span of the given basis states."""
    vecs = []
    current = basis.copy()
    for idx in sector:
        e = np.zeros(dim, dtype=complex)
        e[idx] = 1.0
        # two Gram-Schmidt passes for stability
        for _ in range(2):
            e = e - current @ (current.conj().T @ e)
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            e = _fix_phase(e / norm)
            vecs.append(e)
            current = np.column_stack([current, e])
    return np.column_stack(vecs) if vecs else np.zeros((dim, 0), dtype=complex)


@lru_cache(maxsize=None)
def logical_frame_single() -> LogicalFrame:
    """|0> = |S>|down>, |1> = sqrt(1/3)|T0>|down> - sqrt(2/3)|T->|up>; leak is S=3/2."""
    reg = SpinRegister.single()
    zero, one = _qubit_vectors(reg, "1", "2", "3")
    basis = np.column_stack([zero, one])
    leak = _complement(basis, sz_sector(3, -0.5), reg.dim)
    return LogicalFrame(reg, _frozen(basis), _frozen(leak))


@lru_cache(maxsize=None)
def logical_frame_two() -> LogicalFrame:
    """Product states |x>_a |y>_b ordered 00, 01, 10, 11 (qubit a is the control)."""
    reg = SpinRegister.pair()
    qa = _qubit_vectors(reg, "1a", "2a", "3a")
    qb = _qubit_vectors(reg, "1b", "2b", "3b")
    # each qubit's vectors come back with the other qubit's spins all down
    cols = []
    for x in range(2):
        for y in range(2):
            cols.append(_product(qa[x], qb[y], reg))
    basis = np.column_stack(cols)
    leak = _complement(basis, sz_sector(6, -1.0), reg.dim)
    return LogicalFrame(reg, _frozen(basis), _frozen(leak))


def _product(va: np.ndarray, vb: np.ndarray, reg: SpinRegister) -> np.ndarray:
    # va only touches bits 0-2 (others zero), vb only bits 3-5
    lo = va.reshape(8, 8)[0, :]  # high bits (qubit b) = 000
    hi = vb.reshape(8, 8)[:, 0]  # low bits (qubit a) = 000
    return np.kron(hi, lo)


def project(U: np.ndarray, frame: LogicalFrame) -> np.ndarray:
    """Logical block M[x, y] = <x|U|y>."""
    U = np.asarray(U)
    if U.shape != (frame.ambient_dim, frame.ambient_dim):
        raise ValueError(
            f"operator shape {U.shape} does not match frame dimension {frame.ambient_dim}"
        )
    return frame.basis.conj().T @ U @ frame.basis
