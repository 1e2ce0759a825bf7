"""Hubbard-like models of one or two hybrid qubits in small fermionic Fock spaces.

Each qubit has three orbital levels: ``1`` and ``2`` in the doubly occupied dot,
``3`` in the singly occupied one.  Spin-orbital modes are ordered
``1up, 1dn, 2up, 2dn, 3up, 3dn`` (qubit ``a`` before qubit ``b``) and the
fermionic sign of ``c_m`` / ``c_m^dagger`` is ``(-1)**(occupied modes below m)``.

The Hamiltonians are assembled from explicit operator strings, so every matrix
element carries the sign of the literal second-quantized expression.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

UP, DN = 0, 1
SINGLE_LEVELS = ("1", "2", "3")
PAIR_LEVELS = ("1a", "2a", "3a", "1b", "2b", "3b")

CONFIG_PAIRS = {
    # pairs with tunnelling and exchange-type terms, pairs with Coulomb terms
    "A": (("3a1b", "3a2b"), ("3a1b", "3a2b")),
    "B": (("1a1b", "2a2b"), ("1a1b", "1a2b", "2a1b", "2a2b")),
}

# which levels carry the density in the occupation-modulated hopping
JT_SPECTATORS = ("pair", "others")


@dataclass(frozen=True)
class PairTerms:
    """Spin exchange ``Je``, pair hopping ``Jp`` and occupation-modulated hopping ``Jt``."""

    Je: float = 0.0
    Jp: float = 0.0
    Jt: float = 0.0

    def is_zero(self) -> bool:
        return self.Je == 0 and self.Jp == 0 and self.Jt == 0


@dataclass(frozen=True)
class HubbardParams1Q:
    eps: tuple[float, float, float] = (0.0, 0.0, 0.0)
    t13: float = 0.0
    t23: float = 0.0
    U: tuple[float, float, float] = (0.0, 0.0, 0.0)
    U12: float = 0.0
    U13: float = 0.0
    U23: float = 0.0
    x13: PairTerms = field(default_factory=PairTerms)
    x23: PairTerms = field(default_factory=PairTerms)
    x12: PairTerms = field(default_factory=PairTerms)

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "U", tuple(float(u) for u in self.U))
        if len(self.eps) != 3 or len(self.U) != 3:
            raise ValueError("eps and U need exactly three entries (levels 1, 2, 3)")
        values = [*self.eps, *self.U, self.U12, self.U13, self.U23, self.t13, self.t23]
        for x in (self.x13, self.x23, self.x12):
            values += [x.Je, x.Jp, x.Jt]
        if not np.all(np.isfinite(values)):
            raise ValueError("Hubbard parameters must be finite")
        if min(*self.U, self.U12, self.U13, self.U23) < 0:
            raise ValueError("Coulomb energies must be non-negative")

    def perturbative(self, ratio: float = 0.1) -> bool:
        """True when the intradot U dominates every hopping and exchange-type term."""
        small = [abs(self.t13), abs(self.t23)]
        for x in (self.x13, self.x23, self.x12):
            small += [abs(x.Je), abs(x.Jp), abs(x.Jt)]
        return max(small) <= ratio * min(self.U)


@dataclass(frozen=True)
class HubbardParams2Q:
    """Two qubits coupled in configuration ``A`` or ``B``.

    Inter-qubit terms are keyed by level pairs such as ``"3a1b"``.
    """

    qubit_a: HubbardParams1Q
    qubit_b: HubbardParams1Q
    config: str
    t: dict[str, float] = field(default_factory=dict)
    U: dict[str, float] = field(default_factory=dict)
    x: dict[str, PairTerms] = field(default_factory=dict)

    def __post_init__(self):
        if self.config not in CONFIG_PAIRS:
            raise ValueError(f"config must be 'A' or 'B', got {self.config!r}")
        hop_pairs, u_pairs = CONFIG_PAIRS[self.config]
        for name, allowed, got in (("t", hop_pairs, self.t), ("x", hop_pairs, self.x), ("U", u_pairs, self.U)):
            extra = set(got) - set(allowed)
            if extra:
                raise ValueError(
                    f"config {self.config} has no {name} terms for {sorted(extra)}; allowed {allowed}"
                )
        if any(v < 0 for v in self.U.values()):
            raise ValueError("Coulomb energies must be non-negative")


@dataclass(frozen=True, eq=False)
class FockBlock:
    n_modes: int
    n_electrons: int
    sz: float | None
    basis: tuple[int, ...]
    H: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def sz_diagonal(self) -> np.ndarray:
        return np.array([_sz_of(s, self.n_modes) for s in self.basis])

    def number_diagonal(self) -> np.ndarray:
        return np.array([bin(s).count("1") for s in self.basis], dtype=float)


# -- operator strings -------------------------------------------------------------

Op = tuple[int, bool]  # (mode, is_creation)
Term = tuple[float, tuple[Op, ...]]


def _apply(ops: Sequence[Op], state: int) -> tuple[int, int]:
    """Apply an operator string (rightmost first); returns (sign, new_state) or (0, -1)."""
    sign = 1
    for mode, create in reversed(ops):
        bit = 1 << mode
        occupied = bool(state & bit)
        if occupied == create:
            return 0, -1
        if bin(state & (bit - 1)).count("1") % 2:
            sign = -sign
        state ^= bit
    return sign, state


def _dagger(ops: Sequence[Op]) -> tuple[Op, ...]:
    return tuple((m, not c) for m, c in reversed(ops))


def _number(m: int) -> tuple[Op, ...]:
    return ((m, True), (m, False))


class _Modes:
    """Maps (level, spin) to mode indices for a given ordering."""

    def __init__(self, levels: Sequence[str], ordering: str = "level"):
        if ordering not in ("level", "spin"):
            raise ValueError(f"unknown mode ordering {ordering!r}")
        self.levels = tuple(levels)
        self.ordering = ordering
        self.n_levels = len(levels)

    def __call__(self, level: str, spin: int) -> int:
        k = self.levels.index(level)
        if self.ordering == "level":
            return 2 * k + spin
        return spin * self.n_levels + k

    @property
    def n_modes(self) -> int:
        return 2 * self.n_levels


def _sz_of(state: int, n_modes: int, modes: _Modes | None = None) -> float:
    ups = dns = 0
    for m in range(n_modes):
        if state >> m & 1:
            spin = m % 2 if modes is None or modes.ordering == "level" else m // (n_modes // 2)
            if spin == UP:
                ups += 1
            else:
                dns += 1
    return (ups - dns) / 2


def _hopping(mode: _Modes, i: str, j: str, t: float) -> list[Term]:
    terms = []
    if t == 0:
        return terms
    for s in (UP, DN):
        hop = ((mode(i, s), True), (mode(j, s), False))
        terms += [(t, hop), (t, _dagger(hop))]
    return terms


def _density_density(mode: _Modes, i: str, j: str, U: float) -> list[Term]:
    if U == 0:
        return []
    return [
        (U, _number(mode(i, s1)) + _number(mode(j, s2)))
        for s1 in (UP, DN)
        for s2 in (UP, DN)
    ]


def _jt_levels(i: str, j: str, pool: Sequence[str], spectators: str) -> list[str]:
    if spectators == "pair":
        return [i, j]
    if spectators == "others":
        return [k for k in pool if k not in (i, j)]
    raise ValueError(f"jt spectators must be one of {JT_SPECTATORS}, got {spectators!r}")


def _pair_interaction(
    mode: _Modes, i: str, j: str, x: PairTerms, pool: Sequence[str], spectators: str
) -> list[Term]:
    """-Je(n_i^up n_j^up + n_i^dn n_j^dn) - (Je flip + Jp pair hop + Jt n hop + h.c.)."""
    terms: list[Term] = []
    if x.Je:
        for s in (UP, DN):
            terms.append((-x.Je, _number(mode(i, s)) + _number(mode(j, s))))
        flip = (
            (mode(i, DN), True),
            (mode(j, UP), True),
            (mode(j, DN), False),
            (mode(i, UP), False),
        )
        terms += [(-x.Je, flip), (-x.Je, _dagger(flip))]
    if x.Jp:
        pair_hop = (
            (mode(j, UP), True),
            (mode(j, DN), True),
            (mode(i, UP), False),
            (mode(i, DN), False),
        )
        terms += [(-x.Jp, pair_hop), (-x.Jp, _dagger(pair_hop))]
    if x.Jt:
        for k in _jt_levels(i, j, pool, spectators):
            for s in (UP, DN):
                other = DN if s == UP else UP
                op = _number(mode(k, s)) + ((mode(i, other), True), (mode(j, other), False))
                terms += [(-x.Jt, op), (-x.Jt, _dagger(op))]
    return terms


def _qubit_terms(
    mode: _Modes, p: HubbardParams1Q, names: Sequence[str], spectators: str
) -> list[Term]:
    l1, l2, l3 = names
    terms: list[Term] = []
    for lev, e in zip(names, p.eps):
        if e:
            terms += [(e, _number(mode(lev, s))) for s in (UP, DN)]
    terms += _hopping(mode, l1, l3, p.t13)
    terms += _hopping(mode, l2, l3, p.t23)
    for lev, u in zip(names, p.U):
        if u:
            terms.append((u, _number(mode(lev, UP)) + _number(mode(lev, DN))))
    terms += _density_density(mode, l1, l2, p.U12)
    terms += _density_density(mode, l1, l3, p.U13)
    terms += _density_density(mode, l2, l3, p.U23)
    for (a, b), x in (((l1, l3), p.x13), ((l2, l3), p.x23), ((l1, l2), p.x12)):
        terms += _pair_interaction(mode, a, b, x, names, spectators)
    return terms


def _split(pair: str) -> tuple[str, str]:
    return pair[:2], pair[2:]


def _inter_terms(mode: _Modes, p: HubbardParams2Q, spectators: str) -> list[Term]:
    terms: list[Term] = []
    for pair, t in p.t.items():
        terms += _hopping(mode, *_split(pair), t)
    for pair, u in p.U.items():
        terms += _density_density(mode, *_split(pair), u)
    for pair, x in p.x.items():
        terms += _pair_interaction(mode, *_split(pair), x, PAIR_LEVELS, spectators)
    return terms


def _fock_basis(n_modes: int, n_electrons: int, sz: float | None, modes: _Modes) -> tuple[int, ...]:
    states = []
    for occ in itertools.combinations(range(n_modes), n_electrons):
        s = sum(1 << m for m in occ)
        if sz is None or np.isclose(_sz_of(s, n_modes, modes), sz):
            states.append(s)
    return tuple(sorted(states))


def _matrix(terms: Iterable[Term], basis: Sequence[int]) -> np.ndarray:
    index = {s: k for k, s in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))
    for col, s in enumerate(basis):
        for coef, ops in terms:
            sign, out = _apply(ops, s)
            if sign:
                row = index.get(out)
                if row is None:
                    raise RuntimeError("operator left the particle-number / S_z block")
                H[row, col] += sign * coef
    return H


def _canonical_basis(basis: Sequence[int], src: _Modes, dst: _Modes) -> tuple[int, ...]:
    # relabel states of an alternative mode ordering into the documented one
    out = []
    for s in basis:
        t = 0
        for lev in src.levels:
            for spin in (UP, DN):
                if s >> src(lev, spin) & 1:
                    t |= 1 << dst(lev, spin)
        out.append(t)
    return tuple(out)


def _block(levels, n_electrons, sz, terms_of, ordering) -> FockBlock:
    modes = _Modes(levels, ordering)
    basis = _fock_basis(modes.n_modes, n_electrons, sz, modes)
    H = _matrix(terms_of(modes), basis)
    if ordering != "level":
        basis = _canonical_basis(basis, modes, _Modes(levels))
    return FockBlock(modes.n_modes, n_electrons, sz, basis, H)


def build_single(
    params: HubbardParams1Q,
    sz: float | None = None,
    *,
    ordering: str = "level",
    jt_spectators: str = "pair",
) -> FockBlock:
    """Three electrons in six modes: 20 states, or 9 with ``sz=-0.5``."""
    return _block(
        SINGLE_LEVELS,
        3,
        sz,
        lambda m: _qubit_terms(m, params, SINGLE_LEVELS, jt_spectators),
        ordering,
    )


def build_two(
    params: HubbardParams2Q,
    sz: float | None = -1.0,
    *,
    ordering: str = "level",
    jt_spectators: str = "pair",
) -> FockBlock:
    """Six electrons in twelve modes; the default ``sz=-1`` block has 225 states."""

    def terms(m):
        return (
            _qubit_terms(m, params.qubit_a, PAIR_LEVELS[:3], jt_spectators)
            + _qubit_terms(m, params.qubit_b, PAIR_LEVELS[3:], jt_spectators)
            + _inter_terms(m, params, jt_spectators)
        )

    return _block(PAIR_LEVELS, 6, sz, terms, ordering)


def _qubit_charge(p: HubbardParams1Q, occ: Sequence[int]) -> float:
    i, j, k = occ
    e1, e2, e3 = p.eps
    U1, U2, U3 = p.U
    return (
        i * e1 + j * e2 + k * e3
        + i * j * p.U12 + i * k * p.U13 + k * j * p.U23
        + (i == 2) * U1 + (j == 2) * U2 + (k == 2) * U3
    )


def _check_occupation(occ: Sequence[int]) -> tuple[int, int, int]:
    occ = tuple(int(n) for n in occ)
    if len(occ) != 3 or any(n not in (0, 1, 2) for n in occ):
        raise ValueError(f"level occupations must be three values in {{0, 1, 2}}, got {occ}")
    return occ


def charge_energy(params: HubbardParams1Q | HubbardParams2Q, occupation) -> float:
    """Classical energy of a charge configuration (level energies plus Coulomb terms).

    ``occupation`` is ``(i, j, k)`` for one qubit or ``((i, j, k), (l, m, n))`` for two.
    Single-qubit totals must be 3; for a pair the two qubits must hold 6 together,
    which admits the ``(112, 011)``-type states reached by inter-qubit hopping.
    """
    if isinstance(params, HubbardParams1Q):
        occ = _check_occupation(occupation)
        if sum(occ) != 3:
            raise ValueError(f"a single qubit holds 3 electrons, got occupation {occ}")
        return _qubit_charge(params, occ)

    occ_a, occ_b = (_check_occupation(o) for o in occupation)
    if sum(occ_a) + sum(occ_b) != 6:
        raise ValueError(f"a qubit pair holds 6 electrons, got {occ_a}, {occ_b}")
    n = dict(zip(PAIR_LEVELS, occ_a + occ_b))
    energy = _qubit_charge(params.qubit_a, occ_a) + _qubit_charge(params.qubit_b, occ_b)
    for pair, u in params.U.items():
        la, lb = _split(pair)
        energy += n[la] * n[lb] * u
    return energy


def exact_spectrum(block: FockBlock, k: int | None = None) -> np.ndarray:
    """Lowest ``k`` eigenvalues of the block, ascending."""
    w = np.linalg.eigvalsh(block.H)
    if k is None:
        return w
    if not 0 < k <= block.dim:
        raise ValueError(f"k must lie in 1..{block.dim}, got {k}")
    return w[:k]


# -- JSON parameter files ---------------------------------------------------------

UNITS = ("ueV", "meV", "dimensionless")
_PAIR_NAMES = ("13", "23", "12")


def _qubit_fields(q: str) -> set[str]:
    names = {f"eps_{q}", f"t13_{q}", f"t23_{q}", f"U_{q}", f"U12_{q}", f"U13_{q}", f"U23_{q}"}
    for pair in _PAIR_NAMES:
        names |= {f"Je_{pair}_{q}", f"Jp_{pair}_{q}", f"Jt_{pair}_{q}"}
    return names


def _qubit_from(data, q: str) -> HubbardParams1Q:
    def g(name, default=0.0):
        return data.get(f"{name}_{q}", default)

    def terms(pair):
        return PairTerms(
            Je=float(data.get(f"Je_{pair}_{q}", 0.0)),
            Jp=float(data.get(f"Jp_{pair}_{q}", 0.0)),
            Jt=float(data.get(f"Jt_{pair}_{q}", 0.0)),
        )

    return HubbardParams1Q(
        eps=tuple(g("eps", (0.0, 0.0, 0.0))),
        t13=float(g("t13")),
        t23=float(g("t23")),
        U=tuple(g("U", (0.0, 0.0, 0.0))),
        U12=float(g("U12")),
        U13=float(g("U13")),
        U23=float(g("U23")),
        x13=terms("13"),
        x23=terms("23"),
        x12=terms("12"),
    )


def params_from_dict(data) -> tuple[HubbardParams1Q | HubbardParams2Q, str]:
    """Parse a parameter document; returns the parameters and their energy unit.

    Single-qubit documents use ``config: "single"`` and the ``_a`` fields only.
    """
    unit = data.get("unit", "dimensionless")
    if unit not in UNITS:
        raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")
    config = data.get("config", "single")
    allowed = {"unit", "config"} | _qubit_fields("a")
    if config == "single":
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown fields for a single qubit: {sorted(unknown)}")
        return _qubit_from(data, "a"), unit
    if config not in CONFIG_PAIRS:
        raise ValueError(f"config must be 'single', 'A' or 'B', got {config!r}")

    hop_pairs, u_pairs = CONFIG_PAIRS[config]
    allowed |= _qubit_fields("b")
    allowed |= {f"t_{p}" for p in hop_pairs} | {f"U_{p}" for p in u_pairs}
    allowed |= {f"{x}_{p}" for p in hop_pairs for x in ("Je", "Jp", "Jt")}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown fields for configuration {config}: {sorted(unknown)}")
    x = {}
    for p in hop_pairs:
        terms = PairTerms(
            Je=float(data.get(f"Je_{p}", 0.0)),
            Jp=float(data.get(f"Jp_{p}", 0.0)),
            Jt=float(data.get(f"Jt_{p}", 0.0)),
        )
        if not terms.is_zero():
            x[p] = terms
    params = HubbardParams2Q(
        qubit_a=_qubit_from(data, "a"),
        qubit_b=_qubit_from(data, "b"),
        config=config,
        t={p: float(data[f"t_{p}"]) for p in hop_pairs if f"t_{p}" in data},
        U={p: float(data[f"U_{p}"]) for p in u_pairs if f"U_{p}" in data},
        x=x,
    )
    return params, unit
