"""Command-line entry point: synthesize, verify, couplings, spectrum, times.

Exit codes: 0 ok, 1 usage or input error, 2 goals not met (best attempt still
written), 3 verification failed, 4 degenerate charge sector.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .effective import (
    DEFAULT_J12,
    DegenerateChargeSector,
    Scenario,
    couplings_single,
    couplings_two,
    get_topology,
    min_gap,
    oracle_compare,
    pair_denominators,
    single_denominators,
    spectrum_sweep,
    write_sweep_csv,
)
from .evolve import (
    PLANCK_UEV_NS,
    GateTarget,
    PulseSequence,
    duration_to_ns,
    standard_target,
    verify,
)
from .hubbard import HubbardParams1Q, params_from_dict
from .search import CONTINUOUS, BINARY, NotFound, SearchConfig, synthesize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_FOUND = 2
EXIT_VERIFY_FAILED = 3
EXIT_DEGENERATE = 4

DEFAULT_FMIN = 1 - 1e-4
DEFAULT_LMAX = 1e-6
PERTURBATIVE_RATIO = 0.1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    seed: int | None
    version: str = __version__
    inputs: dict[str, str] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write_sidecar(out: str | Path, manifest: RunManifest) -> None:
    Path(f"{out}.manifest.json").write_text(_dumps(manifest.to_dict()), encoding="utf-8")


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


# -- gates and sequences ------------------------------------------------------------

GATE_NAMES = ("hadamard", "pi8", "cnot", "identity", "identity2")


def _load_custom_gate(path: str) -> GateTarget:
    data = _read_json(path)
    if not isinstance(data, dict) or "real" not in data:
        raise UsageError(f"{path}: a gate file needs 'real' (and optionally 'imag' and 'name')")
    unknown = set(data) - {"name", "real", "imag"}
    if unknown:
        raise UsageError(f"{path}: unknown gate fields {sorted(unknown)}")
    real = np.asarray(data["real"], dtype=float)
    imag = np.asarray(data.get("imag", np.zeros_like(real)), dtype=float)
    if real.shape != imag.shape:
        raise UsageError(f"{path}: 'real' and 'imag' shapes differ")
    return GateTarget(str(data.get("name", Path(path).stem)), real + 1j * imag)


def resolve_gate(gate: str, logical_dim: int) -> GateTarget:
    """A standard gate name or a JSON gate file, checked against the logical dimension."""
    if gate in GATE_NAMES:
        name = "identity2" if gate == "identity" and logical_dim == 4 else gate
        target = standard_target(name)
    elif Path(gate).is_file():
        target = _load_custom_gate(gate)
    else:
        raise UsageError(f"unknown gate {gate!r}; expected one of {GATE_NAMES} or a gate file")
    if target.d != logical_dim:
        raise UsageError(
            f"gate {target.name!r} acts on {target.d} states but the topology encodes {logical_dim}"
        )
    return target


def _load_sequence(path: str) -> PulseSequence:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: a sequence file holds a JSON object")
    try:
        return PulseSequence.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


# -- commands -----------------------------------------------------------------------


def cmd_synthesize(args) -> int:
    t0 = time.perf_counter()
    topo = get_topology(args.topology)
    target = resolve_gate(args.gate, topo.logical_dim)
    cfg = SearchConfig(
        fidelity_goal=args.fmin,
        leakage_goal=args.lmax,
        max_steps=args.max_steps,
        tau_max=args.tau_max,
        rng_seed=args.seed,
        coupling_mode=args.coupling_mode,
        j12=args.j12,
    )
    inputs = {args.gate: _sha256(args.gate)} if args.gate not in GATE_NAMES else {}

    progress = None
    if args.progress == "-":
        progress = sys.stderr
    elif args.progress:
        progress = open(args.progress, "w", encoding="utf-8")
    try:
        seq = synthesize(target, topo, cfg, progress=progress)
        code = EXIT_OK
    except NotFound as exc:
        print(f"synthesize: {exc}", file=sys.stderr)
        seq = exc.best
        code = EXIT_NOT_FOUND
    finally:
        if progress is not None and progress is not sys.stderr:
            progress.close()

    manifest = RunManifest(
        command="synthesize",
        config={"gate": args.gate, "topology": topo.name, "out": args.out, **cfg.to_dict()},
        seed=args.seed,
        inputs=inputs,
    )
    manifest.wall_time_s = time.perf_counter() - t0
    if seq is None:
        return code
    if args.out:
        Path(args.out).write_text(seq.to_json(), encoding="utf-8")
        _write_sidecar(args.out, manifest)
    else:
        sys.stdout.write(seq.to_json())
        sys.stderr.write(_dumps({"manifest": manifest.to_dict()}))
    return code


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    seq = _load_sequence(args.seq_file)
    gate = args.gate or seq.gate
    if gate is None:
        raise UsageError("the sequence names no gate; pass --gate")
    inputs = {args.seq_file: _sha256(args.seq_file)}
    if args.gate and args.gate not in GATE_NAMES:
        inputs[args.gate] = _sha256(args.gate)
    target = resolve_gate(gate, seq.topology.logical_dim)
    rep = verify(seq, target, args.jmax_uev)
    ok = rep.fidelity >= args.fmin and rep.leakage <= args.lmax
    manifest = RunManifest(
        command="verify",
        config={
            "seq_file": args.seq_file,
            "gate": gate,
            "fmin": args.fmin,
            "lmax": args.lmax,
            "jmax_uev": args.jmax_uev,
        },
        seed=seq.seed,
        inputs=inputs,
        wall_time_s=time.perf_counter() - t0,
    )
    out = {"gate": target.name, **rep.to_dict(), "passed": ok, "manifest": manifest.to_dict()}
    sys.stdout.write(_dumps(out))
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def _perturbative_ratio(params, denoms) -> float:
    qubits = [params] if isinstance(params, HubbardParams1Q) else [params.qubit_a, params.qubit_b]
    small = [0.0]
    for q in qubits:
        small += [abs(q.t13), abs(q.t23)]
        for x in (q.x13, q.x23, q.x12):
            small += [abs(x.Je), abs(x.Jp), abs(x.Jt)]
    if not isinstance(params, HubbardParams1Q):
        small += [abs(v) for v in params.t.values()]
        for x in params.x.values():
            small += [abs(x.Je), abs(x.Jp), abs(x.Jt)]
    return max(small) / min(abs(v) for v in denoms.values())


def cmd_couplings(args) -> int:
    t0 = time.perf_counter()
    data = _read_json(args.params_file)
    if not isinstance(data, dict):
        raise UsageError(f"{args.params_file}: parameters must be a JSON object")
    try:
        params, unit = params_from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{args.params_file}: {exc}") from None

    if isinstance(params, HubbardParams1Q):
        config = "single"
        denoms = single_denominators(params)
        J13, J23, J12 = couplings_single(params)
        couplings = {"J13": J13, "J23": J23, "J12": J12}
    else:
        config = params.config
        denoms = pair_denominators(params)
        couplings = dict(couplings_two(params).values)

    ratio = _perturbative_ratio(params, denoms)
    out: dict[str, Any] = {
        "unit": unit,
        "config": config,
        "couplings": couplings,
        "denominators": denoms,
        "perturbative_ratio": ratio,
    }
    if ratio > PERTURBATIVE_RATIO:
        warning = (
            f"max(|t|, |J*|)/min|dE| = {ratio!r} exceeds {PERTURBATIVE_RATIO}; "
            "the effective couplings may be inaccurate"
        )
        out["warning"] = warning
        print(f"couplings: warning: {warning}", file=sys.stderr)
    if args.oracle:
        out["oracle"] = oracle_compare(params).to_dict()

    out["manifest"] = RunManifest(
        command="couplings",
        config={"params_file": args.params_file, "oracle": args.oracle},
        seed=None,
        inputs={args.params_file: _sha256(args.params_file)},
        wall_time_s=time.perf_counter() - t0,
    ).to_dict()
    sys.stdout.write(_dumps(out))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    t0 = time.perf_counter()
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if not (np.isfinite(args.eps_min) and np.isfinite(args.eps_max)) or args.eps_min >= args.eps_max:
        raise UsageError("need finite --eps-min < --eps-max")
    grid = np.linspace(args.eps_min, args.eps_max, args.points)
    table = spectrum_sweep(grid, args.scenario, j12=args.j12, jmax=args.jmax)
    manifest = RunManifest(
        command="spectrum",
        config={
            "scenario": Scenario.parse(args.scenario).value,
            "eps_min": args.eps_min,
            "eps_max": args.eps_max,
            "points": args.points,
            "j12": args.j12,
            "jmax": args.jmax,
            "out": args.out,
        },
        seed=None,
    )
    gap_stream = sys.stdout
    if args.out:
        write_sweep_csv(table, args.out)
        manifest.wall_time_s = time.perf_counter() - t0
        _write_sidecar(args.out, manifest)
    else:
        gap_stream = sys.stderr
        sys.stdout.write("eps,lambda0,lambda1,lambda2\n")
        for row in table:
            sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")
        manifest.wall_time_s = time.perf_counter() - t0
        sys.stderr.write(_dumps({"manifest": manifest.to_dict()}))
    if args.gap:
        gap_stream.write(f"min_gap={min_gap(table)!r}\n")
    return EXIT_OK


def cmd_times(args) -> int:
    t0 = time.perf_counter()
    if not args.jmax_uev > 0:
        raise UsageError("--jmax-uev must be positive")
    seq = _load_sequence(args.seq_file)
    out = {
        "jmax_uev": args.jmax_uev,
        "unit_ns": PLANCK_UEV_NS / args.jmax_uev,
        "steps": [
            {"step": k, "tau": s.tau, "time_ns": duration_to_ns(s.tau, args.jmax_uev)}
            for k, s in enumerate(seq.steps)
        ],
        "total_tau": seq.total_tau,
        "total_ns": duration_to_ns(seq.total_tau, args.jmax_uev),
    }
    out["manifest"] = RunManifest(
        command="times",
        config={"seq_file": args.seq_file, "jmax_uev": args.jmax_uev},
        seed=seq.seed,
        inputs={args.seq_file: _sha256(args.seq_file)},
        wall_time_s=time.perf_counter() - t0,
    ).to_dict()
    sys.stdout.write(_dumps(out))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridgates", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="search for a pulse sequence")
    p.add_argument("--gate", required=True, help=f"one of {', '.join(GATE_NAMES)} or a JSON gate file")
    p.add_argument("--topology", default="single", choices=["single", "A", "B"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="sequence JSON path (default: stdout)")
    p.add_argument("--fmin", type=float, default=DEFAULT_FMIN)
    p.add_argument("--lmax", type=float, default=DEFAULT_LMAX)
    p.add_argument("--max-steps", type=int, help="default 8 for one qubit, 20 for two")
    p.add_argument("--tau-max", type=float, default=2.0)
    p.add_argument("--j12", type=float, default=DEFAULT_J12, help="frozen intradot coupling")
    p.add_argument("--coupling-mode", default=CONTINUOUS, choices=[CONTINUOUS, BINARY])
    p.add_argument("--progress", help="per-generation CSV log path, '-' for stderr")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="recompute fidelity and leakage of a sequence")
    p.add_argument("seq_file")
    p.add_argument("--gate", help="target gate (default: the one named in the file)")
    p.add_argument("--fmin", type=float, default=DEFAULT_FMIN)
    p.add_argument("--lmax", type=float, default=DEFAULT_LMAX)
    p.add_argument("--jmax-uev", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("couplings", help="effective exchange couplings from Hubbard parameters")
    p.add_argument("params_file")
    p.add_argument("--oracle", action="store_true", help="compare with exact diagonalization")
    p.set_defaults(func=cmd_couplings)

    p = sub.add_parser("spectrum", help="three-level spectrum versus detuning")
    p.add_argument("--scenario", default="t23_on", type=Scenario.parse,
                   help="both_off, t13_on or t23_on")
    p.add_argument("--eps-min", type=float, default=-2.0)
    p.add_argument("--eps-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--j12", type=float, default=DEFAULT_J12)
    p.add_argument("--jmax", type=float, default=1.0, help="value of a coupling that is on")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--gap", action="store_true", help="print the minimum gap of the two lowest branches")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("times", help="physical step and total durations")
    p.add_argument("seq_file")
    p.add_argument("--jmax-uev", type=float, required=True)
    p.set_defaults(func=cmd_times)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateChargeSector as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, ValueError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
