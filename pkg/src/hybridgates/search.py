"""Hybrid genetic / Nelder-Mead search for exchange-pulse sequences.

For every step count ``n = min_steps .. max_steps`` a genetic algorithm evolves
fixed-length chromosomes of (duration, tunable couplings) per step.  The best
individual has its durations refined by a simplex every ``simplex_period``
generations.  When the genetic phase stalls, the best few individuals are
polished by restarted simplex runs over all continuous parameters.  The first
sequence that meets both the fidelity and the leakage goal, re-checked on the
full spin space, is returned.

Every random draw comes from a generator seeded by
``(seed, n, generation, individual)``, so results do not depend on evaluation
order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, TextIO

import numpy as np

from .effective import DEFAULT_J12, Topology, get_topology
from .evolve import (
    GateTarget,
    PulseSequence,
    SectorPropagator,
    sector_propagator,
    verify,
)
from .simplex import nelder_mead

CONTINUOUS = "continuous"
BINARY = "binary"


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 64
    max_generations: int = 2000
    mutation_sigma_tau: float = 0.1
    coupling_mutation_prob: float = 0.05
    elite_count: int = 2
    simplex_period: int = 50
    simplex_max_iters: int = 200
    fidelity_goal: float = 1 - 1e-4
    leakage_goal: float = 1e-6
    max_steps: int | None = None  # 8 for one qubit, 20 for two
    min_steps: int = 1
    tau_max: float = 2.0
    rng_seed: int = 0
    coupling_mode: str = CONTINUOUS
    j12: float = DEFAULT_J12
    weight_leakage: float = 1.0
    weight_time: float = 1e-4
    tournament_size: int = 3
    crossover_prob: float = 0.9
    stall_generations: int = 150
    polish_candidates: int = 2
    polish_restarts: int = 80
    polish_iters: int = 3000

    def __post_init__(self):
        counts = (
            self.population_size,
            self.max_generations,
            self.elite_count,
            self.simplex_period,
            self.simplex_max_iters,
            self.min_steps,
            self.tournament_size,
            self.stall_generations,
            self.polish_iters,
        )
        if any(int(c) != c or c < 1 for c in counts):
            raise ValueError("search counts must be positive integers")
        if self.polish_candidates < 0 or self.polish_restarts < 0:
            raise ValueError("polish counts must be non-negative")
        if self.elite_count >= self.population_size:
            raise ValueError("elite_count must be smaller than population_size")
        if self.max_steps is not None and self.max_steps < self.min_steps:
            raise ValueError("max_steps must be >= min_steps")
        if not 0 < self.fidelity_goal < 1 or not 0 < self.leakage_goal < 1:
            raise ValueError("fidelity and leakage goals must lie in (0, 1)")
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")
        if self.coupling_mode not in (CONTINUOUS, BINARY):
            raise ValueError(f"coupling_mode must be {CONTINUOUS!r} or {BINARY!r}")

    def steps_for(self, topology: Topology) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return 8 if topology.logical_dim == 2 else 20

    def to_dict(self) -> dict:
        return asdict(self)


class NotFound(RuntimeError):
    """No sequence met the goals; ``best`` holds the best verified attempt."""

    def __init__(self, max_steps: int, best_F: float, best: PulseSequence | None):
        self.max_steps = max_steps
        self.best_F = best_F
        self.best = best
        super().__init__(
            f"no sequence with at most {max_steps} steps met the goals (best F = {best_F!r})"
        )


@dataclass
class Chromosome:
    taus: np.ndarray
    couplings: np.ndarray  # (n_steps, n_tunable)
    fitness: float | None = field(default=None, compare=False)

    @property
    def n_steps(self) -> int:
        return len(self.taus)

    def decode(self, topology: str | Topology, j12: float = DEFAULT_J12, **kw) -> PulseSequence:
        return PulseSequence.from_arrays(topology, self.taus, self.couplings, j12, **kw)

    @classmethod
    def encode(cls, seq: PulseSequence) -> Chromosome:
        topo = seq.topology
        taus = np.array([s.tau for s in seq.steps])
        couplings = np.array([[s.couplings[n] for n in topo.tunable] for s in seq.steps])
        return cls(taus, couplings)


class _Objective:
    """Batched fitness 1 - F + w_L L + w_T sum(tau) on the frame's S_z sector."""

    def __init__(self, target: GateTarget, topology: Topology, cfg: SearchConfig):
        if target.d != topology.logical_dim:
            raise ValueError(
                f"target {target.name!r} is {target.d}-dimensional but topology "
                f"{topology.name} has {topology.logical_dim} logical states"
            )
        self.prop: SectorPropagator = sector_propagator(topology.name)
        self.target = target.matrix
        self.cfg = cfg
        self.nfev = 0

    def metrics(self, taus: np.ndarray, couplings: np.ndarray):
        self.nfev += len(taus)
        F, L = self.prop.metrics(taus, couplings, self.cfg.j12, self.target)
        fit = 1.0 - F + self.cfg.weight_leakage * L + self.cfg.weight_time * taus.sum(axis=1)
        return fit, F, L

    def one(self, taus: np.ndarray, couplings: np.ndarray) -> float:
        fit, _, _ = self.metrics(taus[None], couplings[None])
        return float(fit[0])


def fitness(
    c: Chromosome,
    target: GateTarget,
    topology: str | Topology,
    cfg: SearchConfig | None = None,
) -> float:
    """Lower is better; zero for a perfect, instantaneous gate."""
    obj = _Objective(target, get_topology(topology), cfg or SearchConfig())
    c.fitness = obj.one(np.asarray(c.taus, float), np.asarray(c.couplings, float))
    return c.fitness


def _refine_taus(obj: _Objective, taus, couplings, cfg: SearchConfig):
    n = len(taus)
    res = nelder_mead(
        lambda x: obj.one(x, couplings),
        taus,
        np.zeros(n),
        np.full(n, cfg.tau_max),
        step=0.05 * cfg.tau_max,
        max_iter=cfg.simplex_max_iters,
    )
    return res.x, res.fun


def refine(seq: PulseSequence, target: GateTarget, cfg: SearchConfig | None = None) -> PulseSequence:
    """Simplex over the step durations with couplings fixed; never raises the fitness."""
    cfg = cfg or SearchConfig(j12=seq.j12_frozen)
    if cfg.j12 != seq.j12_frozen:
        cfg = replace(cfg, j12=seq.j12_frozen)
    c = Chromosome.encode(seq)
    obj = _Objective(target, seq.topology, cfg)
    before = obj.one(c.taus, c.couplings)
    taus, after = _refine_taus(obj, np.clip(c.taus, 0, cfg.tau_max), c.couplings, cfg)
    if after > before:
        return seq
    out = replace_taus(seq, taus)
    if seq.fidelity is not None:
        out = replace(out, fidelity=verify(out, target).fidelity)
    return out


def replace_taus(seq: PulseSequence, taus) -> PulseSequence:
    c = Chromosome.encode(seq)
    return PulseSequence.from_arrays(
        seq.topology,
        [float(t) for t in taus],
        c.couplings,
        seq.j12_frozen,
        gate=seq.gate,
        fidelity=seq.fidelity,
        seed=seq.seed,
        metadata=seq.metadata,
    )


def _polish(obj: _Objective, taus, couplings, cfg: SearchConfig, goal: Callable[[float, float], bool]):
    """Restarted simplex over durations and couplings until goals or stagnation."""
    n, k = couplings.shape
    lower = np.zeros(n * (k + 1))
    upper = np.concatenate([np.full(n, cfg.tau_max), np.ones(n * k)])

    def f(x):
        return obj.one(x[:n], x[n:].reshape(n, k))

    x = np.concatenate([taus, couplings.ravel()])
    fx = f(x)
    for _ in range(cfg.polish_restarts):
        res = nelder_mead(f, x, lower, upper, step=0.1, max_iter=cfg.polish_iters)
        gain = fx - res.fun
        x, fx = res.x, res.fun
        _, F, L = obj.metrics(x[:n][None], x[n:].reshape(1, n, k))
        if goal(F[0], L[0]):
            break
        error = 1.0 - F[0] + cfg.weight_leakage * L[0]
        if gain < 0.05 * error:
            break
    return x[:n].copy(), x[n:].reshape(n, k).copy(), fx


class _Search:
    def __init__(self, target, topology, cfg, progress):
        self.target = target
        self.topology = topology
        self.cfg = cfg
        self.obj = _Objective(target, topology, cfg)
        self.k = len(topology.tunable)
        self.progress = progress
        self.generation = 0
        self.best_overall: tuple[float, PulseSequence | None, float] = (math.inf, None, 0.0)

    def rng(self, n, gen, idx):
        return np.random.default_rng([self.cfg.rng_seed, n, gen, idx])

    def draw_couplings(self, rng, shape):
        if self.cfg.coupling_mode == BINARY:
            return rng.integers(0, 2, size=shape).astype(float)
        return rng.random(shape)

    def goal(self, F, L) -> bool:
        return F >= self.cfg.fidelity_goal and L <= self.cfg.leakage_goal

    def initial(self, n):
        P = self.cfg.population_size
        taus = np.empty((P, n))
        cpl = np.empty((P, n, self.k))
        for i in range(P):
            rng = self.rng(n, 0, i)
            taus[i] = rng.random(n) * self.cfg.tau_max
            cpl[i] = self.draw_couplings(rng, (n, self.k))
        return taus, cpl

    def breed(self, n, gen, taus, cpl, fit):
        cfg = self.cfg
        P = cfg.population_size
        order = np.argsort(fit, kind="stable")
        new_t = np.empty_like(taus)
        new_c = np.empty_like(cpl)
        elites = order[: cfg.elite_count]
        new_t[: cfg.elite_count] = taus[elites]
        new_c[: cfg.elite_count] = cpl[elites]
        for i in range(cfg.elite_count, P):
            rng = self.rng(n, gen, i)

            def pick():
                cand = rng.integers(0, P, size=cfg.tournament_size)
                return cand[np.argmin(fit[cand])]

            a, b = pick(), pick()
            t, c = taus[a].copy(), cpl[a].copy()
            if n > 1 and rng.random() < cfg.crossover_prob:
                cut = rng.integers(1, n)
                t[cut:], c[cut:] = taus[b, cut:], cpl[b, cut:]
            t = np.clip(t + rng.normal(0.0, cfg.mutation_sigma_tau, n), 0.0, cfg.tau_max)
            redraw = rng.random((n, self.k)) < cfg.coupling_mutation_prob
            c = np.where(redraw, self.draw_couplings(rng, (n, self.k)), c)
            new_t[i], new_c[i] = t, c
        return new_t, new_c

    def report(self, fit, F, L):
        if self.progress is not None:
            b = int(np.argmin(fit))
            self.progress.write(
                f"{self.generation},{float(fit[b])!r},{float(F[b])!r},{float(L[b])!r}\n"
            )

    def accept(self, n, taus, couplings, gens) -> PulseSequence | None:
        """Decode, re-verify on the full space, and keep the best attempt."""
        seq = PulseSequence.from_arrays(
            self.topology, taus, couplings, self.cfg.j12, gate=self.target.name, seed=self.cfg.rng_seed
        )
        rep = verify(seq, self.target)
        fit = 1 - rep.fidelity + self.cfg.weight_leakage * rep.leakage + self.cfg.weight_time * rep.total_tau
        meta = {
            "n_steps": n,
            "leakage": rep.leakage,
            "fitness": fit,
            "generations": gens,
            "coupling_mode": self.cfg.coupling_mode,
            "step_count": "piecewise-constant segments including idle ones",
        }
        seq = replace(seq, fidelity=rep.fidelity, metadata=meta)
        if fit < self.best_overall[0]:
            self.best_overall = (fit, seq, rep.fidelity)
        return seq if self.goal(rep.fidelity, rep.leakage) else None

    def finish(self, n, taus, couplings, gens) -> PulseSequence | None:
        """Final refinement of a goal-meeting candidate, then acceptance."""
        cfg = self.cfg
        if cfg.coupling_mode == CONTINUOUS:
            x = np.concatenate([taus, couplings.ravel()])
            upper = np.concatenate([np.full(n, cfg.tau_max), np.ones(couplings.size)])
            res = nelder_mead(
                lambda v: self.obj.one(v[:n], v[n:].reshape(couplings.shape)),
                x,
                np.zeros_like(x),
                upper,
                step=0.01,
                max_iter=cfg.polish_iters,
            )
            polished = (res.x[:n], res.x[n:].reshape(couplings.shape))
        else:
            polished = (taus, couplings)
        refined, _ = _refine_taus(
            self.obj, polished[0], polished[1], replace(cfg, simplex_max_iters=10 * cfg.simplex_max_iters)
        )
        return (
            self.accept(n, refined, polished[1], gens)
            or self.accept(n, polished[0], polished[1], gens)
            or self.accept(n, taus, couplings, gens)
        )

    def run_steps(self, n) -> PulseSequence | None:
        cfg = self.cfg
        taus, cpl = self.initial(n)
        fit, F, L = self.obj.metrics(taus, cpl)
        best_fit = math.inf
        last_gain = 0
        gen = 0
        for gen in range(1, cfg.max_generations + 1):
            self.generation += 1
            b = int(np.argmin(fit))
            if gen % cfg.simplex_period == 0:
                new_t, new_f = _refine_taus(self.obj, taus[b], cpl[b], cfg)
                if new_f <= fit[b]:
                    taus[b] = new_t
                    fit[b], F[b], L[b] = (a[0] for a in self.obj.metrics(taus[b][None], cpl[b][None]))
            self.report(fit, F, L)
            if self.goal(F[b], L[b]):
                found = self.finish(n, taus[b], cpl[b], gen)
                if found is not None:
                    return found
            if fit[b] < best_fit - 1e-12 * max(1.0, abs(best_fit)):
                best_fit, last_gain = fit[b], gen
            elif gen - last_gain >= cfg.stall_generations:
                break
            taus, cpl = self.breed(n, gen, taus, cpl, fit)
            fit, F, L = self.obj.metrics(taus, cpl)

        order = np.argsort(fit, kind="stable")
        if cfg.coupling_mode == CONTINUOUS and cfg.polish_candidates:
            for b in order[: cfg.polish_candidates]:
                t, c, _ = _polish(self.obj, taus[b], cpl[b], cfg, self.goal)
                found = self.finish(n, t, c, gen)
                if found is not None:
                    return found
        else:
            b = order[0]
            t, _ = _refine_taus(self.obj, taus[b], cpl[b], replace(cfg, simplex_max_iters=20 * cfg.simplex_max_iters))
            found = self.finish(n, t, cpl[b], gen)
            if found is not None:
                return found
        self.accept(n, taus[order[0]], cpl[order[0]], gen)
        return None


def synthesize(
    target: GateTarget,
    topology: str | Topology,
    cfg: SearchConfig | None = None,
    progress: TextIO | None = None,
) -> PulseSequence:
    """Shortest-first search for a sequence meeting the fidelity and leakage goals.

    Raises ``NotFound`` (carrying the best attempt) when no step count up to the
    configured maximum succeeds.
    """
    cfg = cfg or SearchConfig()
    topo = get_topology(topology)
    search = _Search(target, topo, cfg, progress)
    max_steps = cfg.steps_for(topo)
    for n in range(cfg.min_steps, max_steps + 1):
        found = search.run_steps(n)
        if found is not None:
            return found
    _, best, best_F = search.best_overall
    raise NotFound(max_steps, best_F, best)
