"""Command-line interface.

Exit codes:
    0  success
    1  unexpected internal error
    2  usage error, unreadable or malformed input
    3  binarization hit the sweep limit (truncated profile)
    4  no steady state and ``--require-steady-state`` was given
    5  ``rerun`` produced outputs that differ from the manifest
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile
import warnings
from pathlib import Path
from typing import Sequence

from . import __version__
from .binarizer import EPSILON_CAP, BinarizerConfig, DegenerateScaleError, NormMode, binarize
from .evaluation import (
    GeneSetMismatch,
    SweepConfig,
    dissimilarity,
    fraction_str,
    parameter_sweep,
    run_validation,
)
from .graph import GraphParseError, interaction_graph_of, parse_boolean_network, parse_graph
from .io import (
    FormatError,
    SimulationSpec,
    build_manifest,
    parse_expression_csv,
    profiles_to_csv,
    profiles_to_json,
    read_params,
    sha256_file,
    sweep_log_jsonl,
    trajectory_to_csv,
    write_text,
)
from .odesim import (
    IntegrationError,
    SnapshotRangeError,
    build_ode,
    detect_steady_state,
    extract_snapshots,
    integrate_rk4,
    threshold_binarize,
)
from .profile import BinaryProfile, TriState

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_TRUNCATED, EXIT_NO_STEADY, EXIT_MISMATCH = range(6)


class InputError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"regbin: {msg}", file=sys.stderr)


# --- argument types ------------------------------------------------------


def _epsilon(s: str) -> float:
    v = float(s)
    if not 0.0 <= v <= EPSILON_CAP:
        raise argparse.ArgumentTypeError(f"epsilon must be within [0, {EPSILON_CAP}]")
    return v


def _positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _marker(s: str) -> tuple[str, TriState]:
    gene, sep, val = s.partition("=")
    if not sep or not gene:
        raise argparse.ArgumentTypeError("expected GENE=0 or GENE=1")
    state = TriState.parse(val)
    if state is TriState.NA:
        raise argparse.ArgumentTypeError("biomarker state must be 0 or 1")
    return gene, state


# --- parser --------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    # subcommands accept the global flags too; SUPPRESS keeps them from
    # clobbering values given before the subcommand
    sup = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=sup if suppress else 0, help="random seed (default 0)")
    p.add_argument("--output-dir", default=sup if suppress else ".", help="where output files go")
    p.add_argument("--format", choices=["csv", "json"], default=sup if suppress else "csv")


def _binarizer_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("binarizer")
    g.add_argument("--config", help="JSON file with binarizer settings")
    g.add_argument("--epsilon", type=_epsilon, help=f"initialization margin, at most {EPSILON_CAP}")
    g.add_argument("--delta", type=_positive, help="harmonization tolerance")
    g.add_argument("--max-sweeps", type=_pos_int)
    g.add_argument("--mode", choices=[m.value for m in NormMode])
    g.add_argument("--relaxed-backprop", action="store_true", default=None)
    g.add_argument("--marker", type=_marker, action="append", default=[], metavar="GENE=0|1")


def _sim_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--t-end", type=_positive)
    g.add_argument("--dt", type=_positive)
    g.add_argument("--at", type=float, nargs="+", metavar="T", help="snapshot times")
    g.add_argument("--snapshots", type=_nonneg_int, help="number of late snapshots")
    g.add_argument("--spacing", type=_positive)
    g.add_argument("--tol", type=_positive, help="steady-state derivative tolerance")
    g.add_argument("--window", type=_positive)
    g.add_argument("--record-every", type=_pos_int, default=1)
    g.add_argument("--backend", choices=["python", "cython"])
    g.add_argument("--require-steady-state", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regbin",
        description="Binarize gene expression against a regulatory graph and validate it on Hill-ODE simulations.",
        epilog=__doc__.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"regbin {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("binarize", help="binarize expression rows against a regulatory graph")
    b.add_argument("graph", help="edge list, or a logic file (.bnet) to derive the graph from")
    b.add_argument("expression", help="expression CSV")
    b.add_argument("--sweep-log", action="store_true", help="also write the sweep log (JSON lines)")
    _binarizer_flags(b)

    s = sub.add_parser("simulate", help="integrate the Hill ODE of a Boolean network")
    s.add_argument("network")
    s.add_argument("params", help="parameter JSON or CSV")
    _sim_flags(s)

    v = sub.add_parser("validate", help="compare threshold truth and binarizer on simulated snapshots")
    v.add_argument("network")
    v.add_argument("params")
    v.add_argument("--truth", help="profile CSV replacing the threshold truth")
    _sim_flags(v)
    _binarizer_flags(v)

    w = sub.add_parser("sweep", help="seeded randomized parameter sweep")
    w.add_argument("network")
    w.add_argument("sweep_config", help="JSON mirroring the sweep settings")
    w.add_argument("--params", help="parameter file supplying the initial state")
    w.add_argument("--runs", type=_nonneg_int, help="override the number of runs")
    w.add_argument("--workers", type=_pos_int, default=1)
    w.add_argument("--csv-runs", action="store_true", help="also write per-run distances as CSV")

    r = sub.add_parser("rerun", help="repeat a run from its manifest and compare outputs")
    r.add_argument("manifest")

    for p in (b, s, v, w, r):
        _global_flags(p, suppress=True)
    return parser


# --- helpers -------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_graph(path: str):
    text = _read(path)
    if path.endswith((".bnet", ".logic")) or ("=" in text and not _looks_like_edges(text)):
        return interaction_graph_of(parse_boolean_network(text))
    return parse_graph(text)


def _looks_like_edges(text: str) -> bool:
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            return "=" not in ln
    return True


def _binarizer_config(args) -> BinarizerConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(_read(args.config))
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON ({exc.msg})") from None
        base = base.get("binarizer", base)
    for key in ("epsilon", "delta", "max_sweeps", "mode", "relaxed_backprop"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    try:
        return BinarizerConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise InputError(f"binarizer config: {exc}") from None


def _sim_spec(args, pf) -> SimulationSpec:
    sim = pf.simulation
    for key in ("t_end", "dt", "spacing", "tol", "window", "snapshots"):
        val = getattr(args, key)
        if val is not None:
            setattr(sim, key, val)
    if args.at is not None:
        sim.snapshot_times = tuple(args.at)
    elif args.snapshots is not None or args.spacing is not None:
        sim.snapshot_times = None
    if sim.dt > sim.t_end:
        raise InputError("--dt must not exceed --t-end")
    return sim


def _x0(pf, genes):
    missing = [g for g in genes if g not in pf.x0]
    if missing:
        raise InputError(f"parameter file has no x0 for {missing}")
    return {g: pf.x0[g] for g in genes}


def _emit(out: dict[str, str], outdir: Path) -> None:
    for name, text in out.items():
        write_text(outdir / name, text)


def _finish(args, argv, inputs: dict, config: dict, out: dict[str, str]) -> None:
    outdir = Path(args.output_dir)
    manifest = build_manifest(args.command, argv, inputs, config, out)
    manifest["cwd"] = os.getcwd()
    manifest["seed"] = args.seed
    manifest["format"] = args.format
    out = dict(out)
    out["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    _emit(out, outdir)


def _profile_doc(items, fmt: str) -> tuple[str, str]:
    if fmt == "json":
        return "profiles.json", profiles_to_json(items)
    return "profiles.csv", profiles_to_csv(items)


def _read_truth(path: str) -> list[BinaryProfile]:
    rows: dict[str, dict[str, TriState]] = {}
    lines = [ln for ln in _read(path).splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or [c.strip() for c in lines[0].split(",")][:3] != ["sample", "gene", "state"]:
        raise InputError(f"{path}: expected header sample,gene,state")
    for i, ln in enumerate(lines[1:], 2):
        cells = [c.strip() for c in ln.split(",")]
        try:
            rows.setdefault(cells[0], {})[cells[1]] = TriState.parse(cells[2])
        except (IndexError, ValueError):
            raise InputError(f"{path}:{i}: malformed profile row") from None
    return [BinaryProfile.from_states(v) for v in rows.values()]


# --- subcommands ---------------------------------------------------------


def cmd_binarize(args, argv) -> int:
    graph = _load_graph(args.graph)
    table = parse_expression_csv(_read(args.expression), args.expression)
    cfg = _binarizer_config(args)
    markers = dict(args.marker)
    unknown = sorted(set(markers) - set(graph.genes))
    if unknown:
        raise InputError(f"biomarker genes not in graph: {unknown}")
    absent = sorted(set(graph.genes) - set(table.genes))
    if absent:
        _err(f"graph genes missing from expression data, filled with 0.5: {absent}")
    items = []
    for sample, row in table:
        try:
            items.append((sample, binarize(graph, row, cfg, markers)))
        except DegenerateScaleError as exc:
            raise InputError(f"sample {sample}: {exc}") from None
    name, doc = _profile_doc(items, args.format)
    out = {name: doc}
    if args.sweep_log:
        out["sweep_log.jsonl"] = sweep_log_jsonl(items)
    config = {"binarizer": cfg.to_dict(), "markers": {g: s.value for g, s in sorted(markers.items())}}
    _finish(args, argv, {"graph": args.graph, "expression": args.expression}, config, out)
    truncated = [s for s, p in items if p.truncated]
    if truncated:
        _err(f"sweep limit reached for {truncated}")
        return EXIT_TRUNCATED
    return EXIT_OK


def _snapshot_doc(snaps, truths, fmt: str) -> tuple[str, str]:
    if fmt == "json":
        doc = [
            {"time": s.time, "values": dict(sorted(s.values.items())),
             "threshold_profile": {g: v.value for g, v in sorted(t.states.items())}}
            for s, t in zip(snaps, truths)
        ]
        return "snapshots.json", json.dumps(doc, indent=2) + "\n"
    genes = sorted(snaps[0].values) if snaps else []
    lines = [",".join(["time", *genes])]
    lines += [",".join([repr(s.time), *(repr(float(s.values[g])) for g in genes)]) for s in snaps]
    return "snapshots.csv", "\n".join(lines) + "\n"


def cmd_simulate(args, argv) -> int:
    net = parse_boolean_network(_read(args.network))
    pf = _load_params(args.params, net)
    sim = _sim_spec(args, pf)
    system = build_ode(net, pf.params)
    traj = integrate_rk4(
        system, _x0(pf, net.genes), sim.t_end, sim.dt, record_every=args.record_every, backend=args.backend
    )
    steady = detect_steady_state(traj, sim.tol, sim.window) if traj.t_end >= sim.window else None
    snaps = extract_snapshots(traj, sim.policy())
    truths = [threshold_binarize(s, pf.params) for s in snaps]
    name, doc = _snapshot_doc(snaps, truths, args.format)
    out = {"trajectory.csv": trajectory_to_csv(traj), name: doc}
    config = {"simulation": sim.to_dict(), "record_every": args.record_every, "steady_state_time": steady}
    _finish(args, argv, {"network": args.network, "params": args.params}, config, out)
    if steady is None:
        _err(f"no steady state detected (tol {sim.tol:g}, window {sim.window:g})")
        if args.require_steady_state:
            return EXIT_NO_STEADY
    return EXIT_OK


def _load_params(path: str, net):
    try:
        pf = read_params(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    missing = pf.params.missing(net.genes)
    if missing:
        raise InputError(f"{path}: no parameters for {missing}")
    return pf


def cmd_validate(args, argv) -> int:
    net = parse_boolean_network(_read(args.network))
    pf = _load_params(args.params, net)
    sim = _sim_spec(args, pf)
    cfg = _binarizer_config(args)
    res = run_validation(
        net, pf.params, _x0(pf, net.genes), cfg,
        t_end=sim.t_end, dt=sim.dt, policy=sim.policy(), tol=sim.tol, window=sim.window,
        record_every=args.record_every, backend=args.backend,
    )
    inputs = {"network": args.network, "params": args.params}
    if args.truth:
        truths = _read_truth(args.truth)
        if len(truths) == 1:
            truths = truths * len(res.test)
        if len(truths) != len(res.test):
            raise InputError(f"{args.truth}: {len(truths)} profiles for {len(res.test)} snapshots")
        try:
            res.reports = [dissimilarity(t, x) for t, x in zip(truths, res.test)]
        except GeneSetMismatch as exc:
            raise InputError(f"{args.truth}: {exc}") from None
        res.truth = truths
        inputs["truth"] = args.truth
    summary = "d = {" + ", ".join(str(r) for r in res.reports) + "}"
    if args.format == "json":
        out = {"report.json": json.dumps(res.to_dict(), indent=2, sort_keys=True) + "\n"}
    else:
        lines = ["snapshot,time,d,mismatched"]
        for i, (s, r) in enumerate(zip(res.snapshots, res.reports), 1):
            lines.append(f"{i},{s.time!r},{r},{' '.join(r.mismatched)}")
        out = {"report.csv": "\n".join(lines) + "\n"}
    config = {"simulation": sim.to_dict(), "binarizer": cfg.to_dict(), "record_every": args.record_every}
    _finish(args, argv, inputs, config, out)
    print(summary)
    if res.steady_time is None:
        _err("no steady state detected")
        if args.require_steady_state:
            return EXIT_NO_STEADY
    if any(p.truncated for p in res.test):
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    net = parse_boolean_network(_read(args.network))
    try:
        raw = json.loads(_read(args.sweep_config))
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.sweep_config}: invalid JSON ({exc.msg})") from None
    raw = dict(raw)
    raw["rng_seed"] = args.seed
    if args.runs is not None:
        raw["n_runs"] = args.runs
    raw.setdefault("n_runs", 0)
    try:
        cfg = SweepConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{args.sweep_config}: {exc}") from None
    inputs = {"network": args.network, "sweep_config": args.sweep_config}
    base_x0 = None
    if args.params:
        base_x0 = _load_params(args.params, net).x0
        inputs["params"] = args.params
    if cfg.x0 is None and cfg.x0_range is None and base_x0 is None:
        raise InputError("no initial state: set x0 or x0_range in the config, or pass --params")
    try:
        report = parameter_sweep(net, cfg, base_x0=base_x0, workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"sweep_report.json": report.to_json()}
    if args.csv_runs or args.format == "csv":
        lines = ["run,status,steady_time,distances"]
        for r in report.runs:
            st = "" if r.steady_time is None else repr(r.steady_time)
            lines.append(f"{r.run},{r.status},{st},{' '.join(fraction_str(d) for d in r.distances)}")
        out["sweep_runs.csv"] = "\n".join(lines) + "\n"
    _finish(args, argv, inputs, {"sweep": cfg.to_dict()}, out)
    sys.stdout.write(report.table())
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    try:
        manifest = json.loads(_read(args.manifest))
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.manifest}: invalid JSON ({exc.msg})") from None
    for role, entry in manifest.get("inputs", {}).items():
        p = Path(manifest.get("cwd", ".")) / entry["path"]
        if not p.exists():
            raise InputError(f"input {role} missing: {p}")
        if sha256_file(p) != entry["sha256"]:
            _err(f"input {role} changed since the recorded run: {p}")
            return EXIT_MISMATCH
    old = list(manifest["argv"])
    with tempfile.TemporaryDirectory() as tmp:
        new_argv = _replace_output_dir(old, tmp)
        proc = subprocess.run(
            [sys.executable, "-m", "regbin", *new_argv],
            cwd=manifest.get("cwd", "."),
            capture_output=True,
            text=True,
        )
        bad = []
        for name, digest in manifest["outputs"].items():
            p = Path(tmp) / name
            if not p.exists() or sha256_file(p) != digest:
                bad.append(name)
    if bad:
        _err(f"outputs differ from manifest: {bad}")
        return EXIT_MISMATCH
    sys.stdout.write(f"reproduced {len(manifest['outputs'])} output(s); exit {proc.returncode}\n")
    return EXIT_OK


def _replace_output_dir(argv: Sequence[str], new: str) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--output-dir":
            skip = True
            continue
        if a.startswith("--output-dir="):
            continue
        out.append(a)
    return ["--output-dir", new, *out]


COMMANDS = {
    "binarize": cmd_binarize,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "rerun": cmd_rerun,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return COMMANDS[args.command](args, argv)
    except (InputError, FormatError, GraphParseError, SnapshotRangeError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except IntegrationError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover
        _err(f"internal error: {exc!r}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
