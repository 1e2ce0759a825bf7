"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed inline and again in the pytest terminal summary.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from hybridgates.cli import main
from hybridgates.effective import (
    CONFIG_A,
    CONFIG_B,
    SINGLE,
    DetuningPoint,
    ExchangeCouplings,
    h3x3,
    heisenberg_hamiltonian,
    min_gap,
    oracle_compare,
    single_denominators,
    spectrum_sweep,
)
from hybridgates.evolve import (
    PulseSequence,
    PulseStep,
    duration_to_ns,
    gate_fidelity,
    standard_target,
    step_unitary,
    verify,
)
from hybridgates.hubbard import HubbardParams1Q, HubbardParams2Q, PairTerms
from hybridgates.search import SearchConfig, synthesize
from hybridgates.spin_space import (
    logical_frame_single,
    project,
    total_spin_operators,
)

SEED = 42


def record(capsys, k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# -- 1. basis ---------------------------------------------------------------------------


def test_criterion_1_basis(capsys):
    t0 = time.perf_counter()
    f = logical_frame_single()
    idx = lambda bits: sum(1 << k for k, s in enumerate(bits) if s == "u")  # noqa: E731
    zero, one = f.basis[:, 0], f.basis[:, 1]
    coef_err = max(
        abs(zero[idx("udd")] - 1 / np.sqrt(2)),  # |S> coefficient 1, split over |ud> - |du>
        abs(zero[idx("dud")] + 1 / np.sqrt(2)),
        abs(one[idx("udd")] - np.sqrt(1 / 3) / np.sqrt(2)),  # sqrt(1/3) |T0>|down>
        abs(one[idx("dud")] - np.sqrt(1 / 3) / np.sqrt(2)),
        abs(one[idx("ddu")] + np.sqrt(2 / 3)),  # -sqrt(2/3) |T->|up>
        np.abs(np.delete(zero, [idx("udd"), idx("dud")])).max(),
        np.abs(np.delete(one, [idx("udd"), idx("dud"), idx("ddu")])).max(),
    )
    s2, sz = total_spin_operators(f.register)
    eig_err = max(
        max(np.abs(s2 @ v - 0.75 * v).max(), np.abs(sz @ v + 0.5 * v).max()) for v in f.basis.T
    )
    dt = time.perf_counter() - t0
    ok = coef_err <= 1e-12 and eig_err <= 1e-12 and dt < 1
    record(capsys, 1, ok, f"coef err {coef_err:.1e}, eigen err {eig_err:.1e}, {dt:.3f} s")


# -- 2. detuning block ----------------------------------------------------------------------


def test_criterion_2_projection(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    f = logical_frame_single()
    worst = 0.0
    for j12, j13, j23 in rng.random((1000, 3)):
        J = ExchangeCouplings(SINGLE, {"J12": j12, "J13": j13, "J23": j23})
        M = project(heisenberg_hamiltonian(J), f)
        top = h3x3(DetuningPoint(0.0, j12, j13, j23))[:2, :2]
        worst = max(worst, np.abs(M - top).max())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5
    record(capsys, 2, ok, f"max entry error {worst:.1e} over 1000 draws, {dt:.2f} s")


# -- 3. conservation --------------------------------------------------------------------


def test_criterion_3_conservation(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    identity = standard_target("identity")
    worst = dict(unitary=0.0, sz=0.0, s2=0.0, leak=0.0)
    topologies = [SINGLE] * 500 + [CONFIG_A] * 250 + [CONFIG_B] * 250
    ops = {t.name: total_spin_operators(t.register) for t in (SINGLE, CONFIG_A)}
    for topo in topologies:
        tun = dict(zip(topo.tunable, rng.random(len(topo.tunable))))
        s = PulseStep(float(rng.uniform(0, 2)), ExchangeCouplings.make(topo, 0.5, **tun))
        U = step_unitary(s)
        s2, sz = ops[SINGLE.name if topo is SINGLE else CONFIG_A.name]
        worst["unitary"] = max(worst["unitary"], np.abs(U.conj().T @ U - np.eye(len(U))).max())
        worst["sz"] = max(worst["sz"], np.abs(U @ sz - sz @ U).max())
        worst["s2"] = max(worst["s2"], np.abs(U @ s2 - s2 @ U).max())
        if topo is SINGLE:
            leak = gate_fidelity(U, logical_frame_single(), identity).leakage
            worst["leak"] = max(worst["leak"], leak)
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-10 and dt < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(capsys, 3, ok, f"{detail}, 1000 steps, {dt:.2f} s")


# -- 4. Hubbard oracle ---------------------------------------------------------------------


def _perturbative_qubit(rng):
    def terms():
        return PairTerms(*rng.uniform(-0.02, 0.02, 3))

    return HubbardParams1Q(
        eps=tuple(rng.uniform(-0.05, 0.05, 3)),
        t13=rng.uniform(-0.02, 0.02),
        t23=rng.uniform(-0.02, 0.02),
        U=(1.0, 1.0, 1.0),
        U12=rng.uniform(0, 0.05),
        U13=rng.uniform(0, 0.05),
        U23=rng.uniform(0, 0.05),
        x13=terms(),
        x23=terms(),
        x12=terms(),
    )


def test_criterion_4_hubbard_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    single_fail, worst_ratio = 0, 0.0
    for _ in range(100):
        p = _perturbative_qubit(rng)
        d = single_denominators(p)
        small = max(abs(p.t13), abs(p.t23), abs(p.x13.Jt), abs(p.x23.Jt), abs(p.x12.Jt))
        tol = max(0.05, 20 * small / min(abs(v) for v in d.values()))
        err = oracle_compare(p).relative_error
        worst_ratio = max(worst_ratio, err / tol)
        single_fail += err > tol

    pair_fail, worst_pair = 0, 0.0
    for _ in range(20):
        x = {
            "1a1b": PairTerms(Je=rng.uniform(-0.02, 0.02)),
            "2a2b": PairTerms(Je=rng.uniform(-0.02, 0.02)),
        }
        p = HubbardParams2Q(_perturbative_qubit(rng), _perturbative_qubit(rng), "B", x=x)
        err = oracle_compare(p).relative_error
        worst_pair = max(worst_pair, err)
        pair_fail += err > 0.10
    dt = time.perf_counter() - t0
    ok = single_fail == 0 and pair_fail == 0 and dt < 300
    record(
        capsys,
        4,
        ok,
        f"single: {single_fail}/100 outside tolerance (worst {worst_ratio:.2f} of it); "
        f"config B: {pair_fail}/20 above 10% (worst {worst_pair:.3f}); {dt:.1f} s",
    )


# -- 5, 7, 9. single-qubit synthesis -----------------------------------------------------


def _synthesize_to(path, gate):
    t0 = time.perf_counter()
    code = main(["synthesize", "--gate", gate, "--topology", "single", "--seed", str(SEED), "--out", str(path)])
    return code, time.perf_counter() - t0


@pytest.fixture(scope="module")
def single_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("single")
    runs = {}
    for gate in ("hadamard", "pi8"):
        path = root / f"{gate}.json"
        code, dt = _synthesize_to(path, gate)
        runs[gate] = (path, code, dt)
    return runs


def test_criterion_5_single_qubit_synthesis(single_runs, capsys):
    ok, parts = True, []
    for gate, (path, code, dt) in single_runs.items():
        seq = PulseSequence.from_json(path.read_text())
        rep = verify(seq, standard_target(gate))
        good = (
            code == 0
            and rep.fidelity >= 1 - 1e-4
            and rep.leakage <= 1e-6
            and len(seq.steps) <= 8
            and seq.j12_frozen == 0.5
            and dt < 600
        )
        ok &= good
        parts.append(f"{gate}: {len(seq.steps)} steps, F {rep.fidelity:.7f}, L {rep.leakage:.1e}, {dt:.1f} s")
    record(capsys, 5, ok, "; ".join(parts))


def test_criterion_7_time_scale(single_runs, capsys):
    unit = duration_to_ns(1.0, 7.2)
    seq = PulseSequence.from_json(single_runs["hadamard"][0].read_text())
    t_h = duration_to_ns(seq.total_tau, 7.2)
    ok = abs(unit - 0.574398) <= 1e-6 and 0.5 <= t_h <= 10
    record(capsys, 7, ok, f"unit {unit:.7f} ns, Hadamard {t_h:.3f} ns (band 0.5-10 ns)")


def test_criterion_9_determinism(single_runs, tmp_path, capsys):
    same = {}
    for gate, (path, _, _) in single_runs.items():
        again = tmp_path / f"{gate}.json"
        _synthesize_to(again, gate)
        same[gate] = again.read_bytes() == path.read_bytes()
    record(capsys, 9, all(same.values()), ", ".join(f"{g}: {'identical' if s else 'differs'}" for g, s in same.items()))


# -- 6. two-qubit synthesis ---------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("topology", ["A", "B"])
def test_criterion_6_cnot(topology, capsys):
    t0 = time.perf_counter()
    target = standard_target("cnot")
    seq = synthesize(target, topology, SearchConfig(rng_seed=SEED))
    dt = time.perf_counter() - t0
    rep = verify(seq, target, 7.2)
    frozen = all(s.couplings["J12a"] == s.couplings["J12b"] == 0.5 for s in seq.steps)
    ok = rep.fidelity >= 1 - 1e-4 and len(seq.steps) <= 20 and frozen and dt < 3600
    detail = (
        f"config {topology}: {len(seq.steps)} steps, F {rep.fidelity:.7f}, L {rep.leakage:.1e}, "
        f"{rep.physical_time_ns:.2f} ns at 7.2 ueV, {dt:.0f} s"
    )
    prev = ACCEPTANCE.get(6)
    if prev is not None:
        ok, detail = ok and prev[0], f"{prev[1]}; {detail}"
    record(capsys, 6, ok, detail)


# -- 8. spectrum --------------------------------------------------------------------------


def test_criterion_8_spectrum(capsys):
    t0 = time.perf_counter()
    grid = np.linspace(-2, 2, 401)
    g13 = min_gap(spectrum_sweep(grid, "t13_on"))
    g23 = min_gap(spectrum_sweep(grid, "t23_on"))
    g0 = min_gap(spectrum_sweep(grid, "both_off", j12=0.0))
    dt = time.perf_counter() - t0
    ok = g13 > 0 and g23 > 0 and g0 < 1e-9 and dt < 1
    record(capsys, 8, ok, f"min gaps T13On {g13:.4f}, T23On {g23:.4f}, BothOff(J12=0) {g0:.1e}, {dt:.3f} s")
