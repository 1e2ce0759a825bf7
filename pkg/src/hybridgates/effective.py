"""Effective Heisenberg models of one and two hybrid qubits.

Energies are in units of the maximum tunable exchange ``J^max`` unless a Hubbard
parameter set brings its own unit, in which case couplings come back in that unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .hubbard import (
    HubbardParams1Q,
    HubbardParams2Q,
    build_single,
    build_two,
    charge_energy,
    exact_spectrum,
)
from .spin_space import SpinRegister, exchange_operator, sz_sector

DEFAULT_J12 = 0.5
DEGENERACY_TOL = 1e-9


class DegenerateChargeSector(ValueError):
    """A charge-energy denominator vanished, so perturbation theory breaks down."""

    def __init__(self, offending: Mapping[str, float], tol: float):
        self.offending = dict(offending)
        self.tol = tol
        listing = ", ".join(f"{k}={v!r}" for k, v in self.offending.items())
        super().__init__(f"charge-energy gap below {tol:g}: {listing}")


@dataclass(frozen=True, eq=False)
class Topology:
    name: str
    labels: tuple[str, ...]
    pairs: dict[str, tuple[str, str]]
    tunable: tuple[str, ...]
    frozen: tuple[str, ...]

    @property
    def register(self) -> SpinRegister:
        return SpinRegister(self.labels)

    @property
    def logical_dim(self) -> int:
        return 2 if len(self.labels) == 3 else 4

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.pairs)


def _qubit_pairs(suffix: str) -> dict[str, tuple[str, str]]:
    return {
        f"J13{suffix}": (f"1{suffix}", f"3{suffix}"),
        f"J23{suffix}": (f"2{suffix}", f"3{suffix}"),
        f"J12{suffix}": (f"1{suffix}", f"2{suffix}"),
    }


def _two_qubit(name: str, inter: Sequence[str]) -> Topology:
    pairs = {**_qubit_pairs("a"), **_qubit_pairs("b")}
    for p in inter:
        pairs[f"J{p}"] = (p[:2], p[2:])
    return Topology(
        name=name,
        labels=("1a", "2a", "3a", "1b", "2b", "3b"),
        pairs=pairs,
        tunable=("J13a", "J23a", "J13b", "J23b", *(f"J{p}" for p in inter)),
        frozen=("J12a", "J12b"),
    )


SINGLE = Topology(
    name="single",
    labels=("1", "2", "3"),
    pairs=_qubit_pairs(""),
    tunable=("J13", "J23"),
    frozen=("J12",),
)
CONFIG_A = _two_qubit("A", ("3a1b", "3a2b"))
# J1a2b and J2a1b vanish identically in configuration B and are not parameters
CONFIG_B = _two_qubit("B", ("1a1b", "2a2b"))

TOPOLOGIES = {t.name: t for t in (SINGLE, CONFIG_A, CONFIG_B)}


def get_topology(name: str | Topology) -> Topology:
    if isinstance(name, Topology):
        return name
    key = {"a": "A", "b": "B"}.get(str(name), str(name))
    try:
        return TOPOLOGIES[key]
    except KeyError:
        raise ValueError(f"unknown topology {name!r}; expected single, A or B") from None


@dataclass(frozen=True)
class ExchangeCouplings:
    """Heisenberg couplings ``J_ij`` keyed by the topology's coupling names."""

    topology: Topology
    values: Mapping[str, float]

    def __post_init__(self):
        unknown = set(self.values) - set(self.topology.names)
        if unknown:
            raise ValueError(
                f"{sorted(unknown)} are not couplings of topology {self.topology.name}"
            )
        full = {name: float(self.values.get(name, 0.0)) for name in self.topology.names}
        if not np.all(np.isfinite(list(full.values()))):
            raise ValueError("couplings must be finite")
        object.__setattr__(self, "values", full)

    @classmethod
    def make(
        cls,
        topology: str | Topology,
        j12: float = DEFAULT_J12,
        **tunable: float,
    ) -> ExchangeCouplings:
        """Tunable couplings by keyword with every frozen J12 set to ``j12``."""
        topo = get_topology(topology)
        values = {name: j12 for name in topo.frozen}
        values.update(tunable)
        return cls(topo, values)

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def scaled(self, factor: float) -> ExchangeCouplings:
        return ExchangeCouplings(self.topology, {k: factor * v for k, v in self.values.items()})

    def tunable_within(self, jmin: float = 0.0, jmax: float = 1.0) -> bool:
        return all(jmin <= self.values[n] <= jmax for n in self.topology.tunable)


@dataclass(frozen=True)
class DetuningPoint:
    eps: float
    J12: float = DEFAULT_J12
    J13: float = 0.0
    J23: float = 0.0


def heisenberg_hamiltonian(J: ExchangeCouplings) -> np.ndarray:
    """Sum of J_ij S_i.S_j over the topology's pairs, on the full spin space."""
    reg = J.topology.register
    H = np.zeros((reg.dim, reg.dim), dtype=complex)
    for name, (i, j) in J.topology.pairs.items():
        if J.values[name]:
            H += J.values[name] * exchange_operator(reg, i, j)
    return H


def h3x3(p: DetuningPoint) -> np.ndarray:
    """Hamiltonian in the basis {|0>, |1>, |E>} with |E> the (1,2)-charge singlet state."""
    J12, J13, J23 = p.J12, p.J13, p.J23
    s3 = np.sqrt(3.0)
    return np.array(
        [
            [-0.75 * J12, -s3 / 4 * (J13 - J23), 3 / 8 * (J23 - J13 + J12)],
            [-s3 / 4 * (J13 - J23), 0.25 * J12 - 0.5 * (J13 + J23), -s3 / 8 * (J13 + 3 * J23 - J12)],
            [3 / 8 * (J23 - J13 + J12), -s3 / 8 * (J13 + 3 * J23 - J12), -0.75 * J23 - p.eps],
        ]
    )


class Scenario(str, Enum):
    BOTH_OFF = "both_off"
    T13_ON = "t13_on"
    T23_ON = "t23_on"

    @classmethod
    def parse(cls, value: str | Scenario) -> Scenario:
        if isinstance(value, Scenario):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"bothoff": "both_off", "t13on": "t13_on", "t23on": "t23_on"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(
                f"unknown scenario {value!r}; expected one of {[s.value for s in cls]}"
            ) from None


def spectrum_sweep(
    eps_grid: Sequence[float],
    scenario: str | Scenario,
    j12: float = DEFAULT_J12,
    jmax: float = 1.0,
) -> np.ndarray:
    """Rows of (eps, lambda0, lambda1, lambda2) with eigenvalues ascending."""
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise ValueError("eps grid must be a non-empty 1-d sequence")
    if np.any(np.diff(eps) <= 0):
        raise ValueError("eps grid must be strictly ascending")
    scenario = Scenario.parse(scenario)
    j13, j23 = {
        Scenario.BOTH_OFF: (0.0, 0.0),
        Scenario.T13_ON: (jmax, 0.0),
        Scenario.T23_ON: (0.0, jmax),
    }[scenario]
    mats = np.array([h3x3(DetuningPoint(e, j12, j13, j23)) for e in eps])
    return np.column_stack([eps, np.linalg.eigvalsh(mats)])


def min_gap(table: np.ndarray) -> float:
    """Smallest separation of the two lowest branches over a sweep table."""
    return float(np.min(table[:, 2] - table[:, 1]))


def write_sweep_csv(table: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("eps,lambda0,lambda1,lambda2\n")
        for row in table:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# -- perturbative couplings -------------------------------------------------------

_EXCITED = {
    # denominator name -> charge configuration of the qubit (levels 1, 2, 3)
    "dE1": (0, 1, 2),
    "dE2": (1, 0, 2),
    "dE3": (2, 0, 1),
    "dE4": (0, 2, 1),
}


def _check(denoms: Mapping[str, float], tol: float) -> None:
    bad = {k: v for k, v in denoms.items() if abs(v) < tol}
    if bad:
        raise DegenerateChargeSector(bad, tol)


def _superexchange(t: float, jt: float, je: float, dE: float) -> float:
    return 4.0 * (t - jt) ** 2 / dE - 2.0 * je


def _qubit_couplings(p: HubbardParams1Q, d: Mapping[str, float]) -> tuple[float, float, float]:
    J13 = _superexchange(p.t13, p.x13.Jt, p.x13.Je, d["dE1"])
    J23 = _superexchange(p.t23, p.x23.Jt, p.x23.Je, d["dE2"])
    J12 = (1.0 / d["dE3"] + 1.0 / d["dE4"]) * 4.0 * p.x12.Jt**2 - 2.0 * p.x12.Je
    return J13, J23, J12


def single_denominators(params: HubbardParams1Q) -> dict[str, float]:
    ground = charge_energy(params, (1, 1, 1))
    return {k: charge_energy(params, occ) - ground for k, occ in _EXCITED.items()}


def couplings_single(
    params: HubbardParams1Q, tol: float = DEGENERACY_TOL
) -> tuple[float, float, float]:
    """(J13, J23, J12) from the superexchange and direct-exchange formulas."""
    d = single_denominators(params)
    _check(d, tol)
    return _qubit_couplings(params, d)


def pair_denominators(params: HubbardParams2Q) -> dict[str, float]:
    base = (1, 1, 1)
    ground = charge_energy(params, (base, base))
    out = {}
    for k, occ in _EXCITED.items():
        out[f"{k}a"] = charge_energy(params, (occ, base)) - ground
        out[f"{k}b"] = charge_energy(params, (base, occ)) - ground
    if params.config == "A":
        out["dE5"] = charge_energy(params, ((1, 1, 2), (0, 1, 1))) - ground
        out["dE6"] = charge_energy(params, ((1, 1, 2), (1, 0, 1))) - ground
    return out


def couplings_two(params: HubbardParams2Q, tol: float = DEGENERACY_TOL) -> ExchangeCouplings:
    d = pair_denominators(params)
    _check(d, tol)
    values: dict[str, float] = {}
    for q, p in (("a", params.qubit_a), ("b", params.qubit_b)):
        qd = {k: d[f"{k}{q}"] for k in _EXCITED}
        values[f"J13{q}"], values[f"J23{q}"], values[f"J12{q}"] = _qubit_couplings(p, qd)

    def x(pair):
        return params.x.get(pair)

    if params.config == "A":
        for pair, dE in (("3a1b", d["dE5"]), ("3a2b", d["dE6"])):
            terms = x(pair)
            jt = terms.Jt if terms else 0.0
            je = terms.Je if terms else 0.0
            values[f"J{pair}"] = _superexchange(params.t.get(pair, 0.0), jt, je, dE)
        return ExchangeCouplings(CONFIG_A, values)

    for pair in ("1a1b", "2a2b"):
        terms = x(pair)
        values[f"J{pair}"] = 0.0 - 2.0 * (terms.Je if terms else 0.0)
    return ExchangeCouplings(CONFIG_B, values)


# -- exact-diagonalization comparison ---------------------------------------------


@dataclass(frozen=True)
class OracleReport:
    """Low-lying gaps of the Hubbard block against the effective spin model."""

    exact_gaps: np.ndarray
    effective_gaps: np.ndarray

    @property
    def relative_error(self) -> float:
        scale = np.max(np.abs(self.exact_gaps))
        return float(np.max(np.abs(self.effective_gaps - self.exact_gaps)) / scale)

    def to_dict(self) -> dict:
        return {
            "exact_gaps": [float(g) for g in self.exact_gaps],
            "effective_gaps": [float(g) for g in self.effective_gaps],
            "relative_error": self.relative_error,
        }


def _sector_levels(J: ExchangeCouplings, sz: float) -> np.ndarray:
    n = len(J.topology.labels)
    idx = sz_sector(n, sz)
    H = heisenberg_hamiltonian(J)[np.ix_(idx, idx)]
    return np.linalg.eigvalsh(H)


def oracle_compare(
    params: HubbardParams1Q | HubbardParams2Q, tol: float = DEGENERACY_TOL
) -> OracleReport:
    """Compare gaps above the lowest level in the S_z = -1/2 (one qubit) or -1 (pair) sector.

    The whole spin sector is matched: 3 levels for one qubit, 15 for a pair.
    """
    if isinstance(params, HubbardParams1Q):
        J13, J23, J12 = couplings_single(params, tol)
        J = ExchangeCouplings(SINGLE, {"J13": J13, "J23": J23, "J12": J12})
        sz, block = -0.5, build_single(params, -0.5)
    else:
        J = couplings_two(params, tol)
        sz, block = -1.0, build_two(params, -1.0)
    eff = _sector_levels(J, sz)
    exact = exact_spectrum(block, len(eff))
    return OracleReport(exact[1:] - exact[0], eff[1:] - eff[0])
