"""File formats: expression matrices, parameter files, profiles, trajectories, manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .odesim import AtTimes, HillParams, LateK, SnapshotPolicy, Trajectory
from .profile import BinaryProfile

LABEL_COLUMNS = ("sample", "experiment", "id", "")


class FormatError(ValueError):
    """Malformed input file; ``where`` names the file and line if known."""

    def __init__(self, message: str, where: str | None = None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def _float_or_missing(token: str, where: str) -> float | None:
    t = token.strip()
    if t == "" or t.lower() in {"nan", "na"}:
        return None
    try:
        v = float(t)
    except ValueError:
        raise FormatError(f"not a number: {token!r}", where) from None
    if math.isnan(v):
        return None
    if not math.isfinite(v):
        raise FormatError(f"non-finite value {token!r}", where)
    return v


# --- expression matrix ---------------------------------------------------


@dataclass
class ExpressionTable:
    genes: tuple[str, ...]
    samples: tuple[str, ...]
    rows: list[dict[str, float | None]]

    def __iter__(self):
        return iter(zip(self.samples, self.rows))


def parse_expression_csv(text: str, source: str = "<expression>") -> ExpressionTable:
    """Header of gene names, one row per experiment; blank or ``NaN`` cells are missing.

    A first column named ``sample``, ``experiment`` or ``id`` (or left blank)
    holds row labels.
    """
    reader = csv.reader(io.StringIO(text))
    lines = [(i, r) for i, r in enumerate(reader, 1) if r and not r[0].lstrip().startswith("#")]
    if not lines:
        raise FormatError("empty expression file", source)
    hdr_line, header = lines[0]
    header = [h.strip() for h in header]
    labelled = header[0].lower() in LABEL_COLUMNS
    genes = header[1:] if labelled else header
    if not genes or any(not g for g in genes):
        raise FormatError("header must list gene names", f"{source}:{hdr_line}")
    if len(set(genes)) != len(genes):
        raise FormatError("duplicate gene in header", f"{source}:{hdr_line}")
    samples, rows = [], []
    for lineno, rec in lines[1:]:
        where = f"{source}:{lineno}"
        if len(rec) != len(header):
            raise FormatError(f"expected {len(header)} fields, got {len(rec)}", where)
        label = rec[0].strip() if labelled else f"row{len(rows) + 1}"
        cells = rec[1:] if labelled else rec
        vals = {g: _float_or_missing(c, where) for g, c in zip(genes, cells)}
        neg = [g for g, v in vals.items() if v is not None and v < 0]
        if neg:
            raise FormatError(f"negative expression for {neg}", where)
        samples.append(label or f"row{len(rows) + 1}")
        rows.append(vals)
    return ExpressionTable(tuple(genes), tuple(samples), rows)


def format_expression_csv(genes: Sequence[str], samples: Sequence[str], rows: Sequence[Mapping]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", *genes])
    for s, r in zip(samples, rows):
        w.writerow([s, *("NaN" if r.get(g) is None else repr(float(r[g])) for g in genes)])
    return buf.getvalue()


# --- parameters ----------------------------------------------------------


@dataclass
class SimulationSpec:
    t_end: float = 100.0
    dt: float = 0.01
    snapshot_times: tuple[float, ...] | None = None
    snapshots: int = 3
    spacing: float = 5.0
    tol: float = 1e-4
    window: float = 10.0

    def policy(self) -> SnapshotPolicy:
        if self.snapshot_times is not None:
            return AtTimes(tuple(self.snapshot_times))
        return LateK(self.snapshots, self.spacing)

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "dt": self.dt,
            "snapshot_times": list(self.snapshot_times) if self.snapshot_times is not None else None,
            "snapshots": self.snapshots,
            "spacing": self.spacing,
            "tol": self.tol,
            "window": self.window,
        }


@dataclass
class ParamFile:
    params: HillParams
    x0: dict[str, float] = field(default_factory=dict)
    simulation: SimulationSpec = field(default_factory=SimulationSpec)


_GENE_FIELDS = {"kappa_rate", "gamma", "theta", "hill_n", "x0"}


def _params_from_rows(rows: Mapping[str, Mapping], default_n, where: str) -> tuple[HillParams, dict]:
    kap, gam, th, nn, x0 = {}, {}, {}, {}, {}
    for g, entry in rows.items():
        extra = set(entry) - _GENE_FIELDS
        if extra:
            raise FormatError(f"gene {g}: unknown fields {sorted(extra)}", where)
        try:
            kap[g] = float(entry["kappa_rate"])
            gam[g] = float(entry["gamma"])
            th[g] = float(entry["theta"])
        except KeyError as exc:
            raise FormatError(f"gene {g}: missing {exc.args[0]}", where) from None
        except (TypeError, ValueError):
            raise FormatError(f"gene {g}: non-numeric rate or threshold", where) from None
        if entry.get("hill_n") not in (None, ""):
            nn[g] = float(entry["hill_n"])
        if entry.get("x0") not in (None, ""):
            x0[g] = float(entry["x0"])
    if nn:
        base = float(default_n) if default_n is not None else None
        if base is None and len(nn) != len(kap):
            raise FormatError("hill_n given for some genes only and no default", where)
        hill = {g: nn.get(g, base) for g in kap}
    else:
        hill = float(default_n) if default_n is not None else None
    try:
        if hill is None:
            params = HillParams(kap, gam, th)
        else:
            params = HillParams(kap, gam, th, hill)
    except ValueError as exc:
        raise FormatError(str(exc), where) from None
    return params, x0


def parse_params_json(text: str, source: str = "<params>") -> ParamFile:
    """``{"hill_n": n, "genes": {g: {kappa_rate, gamma, theta, [hill_n], [x0]}}, "simulation": {...}}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", f"{source}:{exc.lineno}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("genes"), dict):
        raise FormatError("expected an object with a 'genes' table", source)
    params, x0 = _params_from_rows(doc["genes"], doc.get("hill_n"), source)
    if "x0" in doc:
        x0.update({g: float(v) for g, v in doc["x0"].items()})
    sim = doc.get("simulation") or {}
    unknown = set(sim) - set(SimulationSpec.__dataclass_fields__)
    if unknown:
        raise FormatError(f"unknown simulation keys {sorted(unknown)}", source)
    if sim.get("snapshot_times") is not None:
        sim = {**sim, "snapshot_times": tuple(float(t) for t in sim["snapshot_times"])}
    return ParamFile(params, x0, SimulationSpec(**sim))


def parse_params_csv(text: str, source: str = "<params>") -> ParamFile:
    """Columns ``gene,kappa_rate,gamma,theta`` plus optional ``hill_n`` and ``x0``."""
    reader = csv.DictReader(
        (ln for ln in io.StringIO(text) if ln.strip() and not ln.lstrip().startswith("#"))
    )
    if reader.fieldnames is None or "gene" not in reader.fieldnames:
        raise FormatError("parameter CSV needs a 'gene' column", source)
    rows = {}
    for rec in reader:
        g = rec.pop("gene").strip()
        if g in rows:
            raise FormatError(f"gene {g} listed twice", source)
        rows[g] = {k.strip(): v for k, v in rec.items() if k is not None}
    params, x0 = _params_from_rows(rows, None, source)
    return ParamFile(params, x0)


def params_to_json(pf: ParamFile) -> str:
    p = pf.params
    genes = sorted(p.kappa_rate)
    doc: dict = {}
    if not isinstance(p.hill_n, Mapping):
        doc["hill_n"] = p.hill_n
    doc["genes"] = {}
    for g in genes:
        entry = {"kappa_rate": p.kappa_rate[g], "gamma": p.gamma[g], "theta": p.theta[g]}
        if isinstance(p.hill_n, Mapping):
            entry["hill_n"] = p.n_of(g)
        if g in pf.x0:
            entry["x0"] = pf.x0[g]
        doc["genes"][g] = entry
    doc["simulation"] = pf.simulation.to_dict()
    return json.dumps(doc, indent=2) + "\n"


def read_params(path: str | os.PathLike) -> ParamFile:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if path.suffix.lower() == ".csv":
            return parse_params_csv(text, str(path))
        return parse_params_json(text, str(path))


# --- profiles ------------------------------------------------------------


def profiles_to_csv(items: Iterable[tuple[str, BinaryProfile]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", "gene", "state", "provenance"])
    for sample, prof in items:
        for g in prof.genes:
            w.writerow([sample, g, prof.states[g].value, prof.provenance[g].value])
    return buf.getvalue()


def profiles_to_json(items: Iterable[tuple[str, BinaryProfile]]) -> str:
    doc = [{"sample": s, **p.to_dict()} for s, p in items]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sweep_log_jsonl(items: Iterable[tuple[str, BinaryProfile]]) -> str:
    out = []
    for sample, prof in items:
        for ev in prof.sweep_log:
            out.append(json.dumps({"sample": sample, **ev.to_dict()}, sort_keys=True))
    return "\n".join(out) + ("\n" if out else "")


# --- trajectories --------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", *traj.genes])
    for t, row in zip(traj.times, traj.states):
        w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])
    return buf.getvalue()


# --- manifests -----------------------------------------------------------


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_manifest(
    subcommand: str,
    argv: Sequence[str],
    inputs: Mapping[str, str | os.PathLike],
    config: Mapping,
    outputs: Mapping[str, str],
) -> dict:
    """Everything needed to rerun: argv, config, and hashes of inputs and outputs.

    ``outputs`` maps output file names to their text content.
    """
    return {
        "tool": "regbin",
        "version": __version__,
        "subcommand": subcommand,
        "argv": list(argv),
        "inputs": {
            role: {"path": str(p), "sha256": sha256_file(p)} for role, p in sorted(inputs.items())
        },
        "config": dict(config),
        "outputs": {name: sha256_text(text) for name, text in sorted(outputs.items())},
    }


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
