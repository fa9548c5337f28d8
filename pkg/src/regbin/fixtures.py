"""Bundled reference networks, parameters and tables."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .graph import BooleanNetwork, RegulatoryGraph, parse_boolean_network, parse_graph
from .io import ExpressionTable, ParamFile, parse_expression_csv, parse_params_json
from .profile import BinaryProfile, TriState

NETWORKS = ("artificial", "oscillator", "breast_cancer")
_PARAMS = {"artificial": "artificial_params.json", "oscillator": "oscillator_params.json",
           "breast_cancer": "breast_params.json"}
_SNAPSHOTS = {"artificial": "artificial_snapshots.csv", "oscillator": "oscillator_snapshots.csv",
              "breast_cancer": "breast_snapshots.csv"}

BREAST_GENES = ("EGFR", "ERK12", "PIK3CA", "AKT1", "GSK3", "MDM2", "TP53",
                "PTEN", "PARP1", "BRCA1", "BCL2", "BAX", "CCND1")


def path(name: str):
    """Filesystem path of a bundled data file (usable as a CLI argument)."""
    return resources.files("regbin") / "data" / name


def text(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def _check(name: str) -> None:
    if name not in NETWORKS:
        raise KeyError(f"unknown fixture {name!r}; have {NETWORKS}")


@lru_cache(maxsize=None)
def network(name: str) -> BooleanNetwork:
    _check(name)
    return parse_boolean_network(text(f"{name}.bnet"))


def params(name: str) -> ParamFile:
    _check(name)
    return parse_params_json(text(_PARAMS[name]), _PARAMS[name])


def reference_snapshots(name: str) -> ExpressionTable:
    _check(name)
    return parse_expression_csv(text(_SNAPSHOTS[name]), _SNAPSHOTS[name])


def breast_interaction_graph() -> RegulatoryGraph:
    return parse_graph(text("breast_fig6.edges"))


def rnaseq_table() -> ExpressionTable:
    return parse_expression_csv(text("table1_rnaseq.csv"), "table1_rnaseq.csv")


def rnaseq_reference_profile() -> BinaryProfile:
    rows = [ln.split(",") for ln in text("table1_profile.csv").splitlines()[1:] if ln]
    return BinaryProfile.from_states({g: TriState.parse(s) for g, s in rows})


def breast_steady_states() -> dict[str, BinaryProfile]:
    lines = text("breast_steady_states.csv").splitlines()
    genes = lines[0].split(",")[1:]
    out = {}
    for ln in lines[1:]:
        label, *vals = ln.split(",")
        out[label] = BinaryProfile.from_states({g: TriState.parse(v) for g, v in zip(genes, vals)})
    return out
