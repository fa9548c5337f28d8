"""Regulation-guided binarization of expression snapshots.

Values are min-max normalized, extreme values and biomarkers seed a tri-state
profile, and the profile is then completed by repeated sweeps over the signed
regulatory graph:

1. forward: a target whose regulators are all defined and jointly determine it
   (every activator 1 and every inhibitor 0, or the reverse) takes that value;
2. backward: a defined target whose regulators are all NA hands a value to its
   dominant regulator, the one with the smallest tau score;
3. harmonize: other NA regulators whose tau lies within ``delta`` of the
   dominant one receive the value consistent with the target;
4. inconsistency test: a target contradicted by every one of its regulators is
   reset to NA together with those regulators. A confusion seen twice freezes
   the genes involved.

Sweeps stop at the first one that neither assigns nor resets anything.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .graph import InteractionSign, RegulatoryGraph
from .profile import BinaryProfile, Provenance, SweepEvent, TriState

ACT = InteractionSign.ACTIVATOR
INH = InteractionSign.INHIBITOR

NEUTRAL_FILL = 0.5
EPSILON_CAP = 0.05


class DegenerateScaleError(ValueError):
    """All values in a normalization scope are equal (or fewer than two exist)."""


class NormMode(enum.Enum):
    GLOBAL = "global"
    PER_GENE = "per-gene"
    PER_SAMPLE = "per-sample"


@dataclass(frozen=True)
class BinarizerConfig:
    epsilon: float = 0.05
    delta: float = 0.05
    max_sweeps: int | None = None  # None -> 10 * number of genes
    mode: NormMode = NormMode.GLOBAL
    relaxed_backprop: bool = False
    biomarkers_resettable: bool = False
    neutral_fill: float = NEUTRAL_FILL

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= EPSILON_CAP):
            raise ValueError(f"epsilon must lie in [0, {EPSILON_CAP}], got {self.epsilon}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.max_sweeps is not None and self.max_sweeps < 1:
            raise ValueError("max_sweeps must be a positive integer")
        if self.neutral_fill != NEUTRAL_FILL:
            raise ValueError("neutral_fill is fixed at 0.5")
        if not isinstance(self.mode, NormMode):
            object.__setattr__(self, "mode", NormMode(self.mode))

    def sweeps_for(self, n_genes: int) -> int:
        return self.max_sweeps if self.max_sweeps is not None else max(1, 10 * n_genes)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "max_sweeps": self.max_sweeps,
            "mode": self.mode.value,
            "relaxed_backprop": self.relaxed_backprop,
            "biomarkers_resettable": self.biomarkers_resettable,
            "neutral_fill": self.neutral_fill,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BinarizerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown binarizer config keys {sorted(unknown)}")
        kw = dict(d)
        if "mode" in kw:
            kw["mode"] = NormMode(kw["mode"])
        return cls(**kw)


# --- normalization -------------------------------------------------------


def _missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def _scale(values: Iterable[float]) -> tuple[float, float]:
    finite = [float(v) for v in values if not _missing(v)]
    if any(not math.isfinite(v) for v in finite):
        raise ValueError("infinite expression value")
    if len(set(finite)) < 2:
        raise DegenerateScaleError("need at least two distinct finite values to min-max scale")
    return min(finite), max(finite)


def _apply(v, lo: float, hi: float):
    if _missing(v):
        return None
    return (float(v) - lo) / (hi - lo)


def min_max_normalize(
    raw: Mapping[str, float | None], mode: NormMode | str = NormMode.GLOBAL
) -> dict[str, float | None]:
    """Scale one expression vector into [0, 1]; missing/NaN entries stay ``None``.

    A single vector has one sample, so ``PER_GENE`` scaling is always
    degenerate here; use :func:`normalize_matrix` for several samples.
    """
    mode = NormMode(mode)
    if mode is NormMode.PER_GENE:
        raise DegenerateScaleError("per-gene scaling needs more than one sample")
    lo, hi = _scale(raw.values())
    return {g: _apply(v, lo, hi) for g, v in raw.items()}


def normalize_matrix(
    rows: Sequence[Mapping[str, float | None]], mode: NormMode | str = NormMode.GLOBAL
) -> list[dict[str, float | None]]:
    """Min-max scale a list of samples over the whole matrix, each gene, or each sample."""
    mode = NormMode(mode)
    if mode is NormMode.PER_SAMPLE:
        return [min_max_normalize(r, NormMode.GLOBAL) for r in rows]
    if mode is NormMode.GLOBAL:
        lo, hi = _scale(v for r in rows for v in r.values())
        return [{g: _apply(v, lo, hi) for g, v in r.items()} for r in rows]
    genes = sorted({g for r in rows for g in r})
    scales = {}
    for g in genes:
        try:
            scales[g] = _scale(r.get(g) for r in rows)
        except DegenerateScaleError:
            raise DegenerateScaleError(f"gene {g!r} has a degenerate per-gene scale") from None
    return [{g: _apply(v, *scales[g]) for g, v in r.items()} for r in rows]


def neutral_fill(
    graph: RegulatoryGraph, expr: Mapping[str, float | None]
) -> tuple[dict[str, float], frozenset[str]]:
    """Give every graph gene a value; absent or missing ones get 0.5.

    Returns the filled vector and the set of genes that were filled.
    """
    filled, placeholders = {}, set()
    for g in graph.genes:
        v = expr.get(g)
        if _missing(v):
            filled[g] = NEUTRAL_FILL
            placeholders.add(g)
        else:
            filled[g] = float(v)
    return filled, frozenset(placeholders)


# --- elementary rules ----------------------------------------------------


def consistent(target: TriState, sign: InteractionSign, reg: TriState) -> bool:
    """Whether the regulator value alone can explain the target value."""
    if not (target.defined and reg.defined):
        raise ValueError("consistency is only defined for assigned values")
    if sign is ACT:
        return target is reg
    return target is not reg


def consistent_value(target: TriState, sign: InteractionSign) -> TriState:
    """The regulator value that makes it consistent with ``target``."""
    return target if sign is ACT else ~target


def tau_score(target_value: TriState, sign: InteractionSign, kappa: float) -> float:
    """Dominance score of a regulator (lower means more dominant).

    With B the target's Boolean value and kappa the regulator's normalized
    expression: activators score ``B(1-kappa) + kappa(1-B)``, inhibitors
    ``B kappa + (1-kappa)(1-B)``.
    """
    if not target_value.defined:
        raise ValueError("tau is only defined for an assigned target")
    b = 1.0 if target_value is TriState.ONE else 0.0
    if sign is ACT:
        return b * (1.0 - kappa) + kappa * (1.0 - b)
    return b * kappa + (1.0 - kappa) * (1.0 - b)


# --- profile state -------------------------------------------------------


@dataclass
class _State:
    graph: RegulatoryGraph
    kappa: dict[str, float]
    cfg: BinarizerConfig
    states: dict[str, TriState]
    prov: dict[str, Provenance]
    biomarkers: frozenset[str] = frozenset()
    log: list[SweepEvent] = field(default_factory=list)
    confusions: set = field(default_factory=set)
    sweep: int = 0

    def set(self, gene: str, value: TriState, prov: Provenance, phase: str, detail: str = "") -> None:
        old = self.states[gene]
        self.states[gene] = value
        self.prov[gene] = prov
        self.log.append(SweepEvent(self.sweep, phase, gene, old, value, detail))

    def frozen(self, gene: str) -> bool:
        return self.prov[gene] is Provenance.FROZEN

    def assignable(self, gene: str) -> bool:
        return self.states[gene] is TriState.NA and not self.frozen(gene)

    def profile(self, truncated: bool = False) -> BinaryProfile:
        return BinaryProfile(
            dict(self.states), dict(self.prov), list(self.log), self.sweep, truncated
        )


def _apply_batch(st: _State, proposals: list[tuple[str, TriState, str]], prov: Provenance, phase: str) -> list[str]:
    """Apply (gene, value, detail) proposals in order; first proposal per gene wins.

    A later proposal that disagrees with an earlier one in the same phase is
    logged as a conflict and dropped.
    """
    chosen: dict[str, TriState] = {}
    applied = []
    for gene, value, detail in proposals:
        if gene in chosen:
            if chosen[gene] is not value:
                st.log.append(
                    SweepEvent(st.sweep, phase + ":conflict", gene, chosen[gene], value, detail)
                )
            continue
        if not st.assignable(gene):
            continue
        chosen[gene] = value
        st.set(gene, value, prov, phase, detail)
        applied.append(gene)
    return applied


def initialize(
    expr: Mapping[str, float],
    cfg: BinarizerConfig,
    markers: Mapping[str, TriState | bool] | None = None,
    *,
    graph: RegulatoryGraph | None = None,
    placeholders: Iterable[str] = (),
) -> BinaryProfile:
    """Seed a profile from extreme values (``<= eps`` -> 0, ``>= 1-eps`` -> 1) and biomarkers.

    Genes in ``placeholders`` (neutral-filled) are never thresholded.
    """
    genes = graph.genes if graph is not None else tuple(sorted(expr))
    markers = dict(markers or {})
    placeholders = frozenset(placeholders)
    for g, v in list(markers.items()):
        if g not in genes:
            raise KeyError(f"biomarker gene {g!r} is not in the graph")
        v = v if isinstance(v, TriState) else TriState.from_bool(bool(v))
        if not v.defined:
            raise ValueError(f"biomarker {g!r} must be 0 or 1")
        markers[g] = v
    states: dict[str, TriState] = {}
    prov: dict[str, Provenance] = {}
    log: list[SweepEvent] = []
    for g in genes:
        if g in markers:
            states[g], prov[g] = markers[g], Provenance.BIOMARKER
        elif g in placeholders or g not in expr:
            states[g], prov[g] = TriState.NA, Provenance.UNASSIGNED
            continue
        elif expr[g] <= cfg.epsilon:
            states[g], prov[g] = TriState.ZERO, Provenance.EXTREME
        elif expr[g] >= 1.0 - cfg.epsilon:
            states[g], prov[g] = TriState.ONE, Provenance.EXTREME
        else:
            states[g], prov[g] = TriState.NA, Provenance.UNASSIGNED
            continue
        log.append(SweepEvent(0, "init", g, TriState.NA, states[g], prov[g].value))
    return BinaryProfile(states, prov, log)


# --- sweep phases --------------------------------------------------------


def forward_step(graph: RegulatoryGraph, profile: BinaryProfile) -> dict[str, TriState]:
    """Targets fully determined by their (all defined) regulators."""
    out = {}
    states = profile.states
    for t in graph.genes:
        if states[t] is not TriState.NA or profile.provenance[t] is Provenance.FROZEN:
            continue
        regs = graph.regulators_of(t)
        if not regs or any(not states[r].defined for r, _ in regs):
            continue
        if all(states[r] is (TriState.ONE if s is ACT else TriState.ZERO) for r, s in regs):
            out[t] = TriState.ONE
        elif all(states[r] is (TriState.ZERO if s is ACT else TriState.ONE) for r, s in regs):
            out[t] = TriState.ZERO
    return out


@dataclass(frozen=True)
class BackAssignment:
    target: str
    regulator: str
    sign: InteractionSign
    value: TriState
    tau: float


def _backprop_triggered(graph, states, target, relaxed: bool) -> bool:
    regs = graph.regulators_of(target)
    if not regs:
        return False
    if not relaxed:
        return all(states[r] is TriState.NA for r, _ in regs)
    t = states[target]
    defined = [(r, s) for r, s in regs if states[r].defined]
    return len(defined) < len(regs) and not any(consistent(t, s, states[r]) for r, s in defined)


def dominant_regulator(
    candidates: Sequence[tuple[str, InteractionSign]], target_value: TriState, kappa: Mapping[str, float]
) -> tuple[str, InteractionSign, float] | None:
    """Argmin of tau; ties go to activators, then to the smaller name."""
    best = None
    for r, s in candidates:
        key = (tau_score(target_value, s, kappa[r]), s is not ACT, r)
        if best is None or key < best[0]:
            best = (key, r, s)
    if best is None:
        return None
    return best[1], best[2], best[0][0]


def backward_step(
    graph: RegulatoryGraph,
    profile: BinaryProfile,
    expr: Mapping[str, float],
    cfg: BinarizerConfig,
) -> list[BackAssignment]:
    """One dominant regulator per eligible defined target, in target order."""
    states = profile.states
    out = []
    for t in graph.genes:
        tv = states[t]
        if not tv.defined or not _backprop_triggered(graph, states, t, cfg.relaxed_backprop):
            continue
        cands = [
            (r, s)
            for r, s in graph.regulators_of(t)
            if states[r] is TriState.NA and profile.provenance[r] is not Provenance.FROZEN
        ]
        pick = dominant_regulator(cands, tv, expr)
        if pick is None:
            continue
        r, s, tau = pick
        out.append(BackAssignment(t, r, s, consistent_value(tv, s), tau))
    return out


def harmonize(
    graph: RegulatoryGraph,
    profile: BinaryProfile,
    expr: Mapping[str, float],
    delta: float,
    assigned: Sequence[BackAssignment],
) -> list[tuple[str, TriState, str]]:
    """Extend each back-propagated choice to NA co-regulators with ``|tau_i - tau_j| < delta``.

    Cooperative partners (same sign) copy the value, the others take its negation.
    """
    states = profile.states
    out = []
    for a in assigned:
        tv = states[a.target]
        if not tv.defined:
            continue
        for r, s in graph.regulators_of(a.target):
            if r == a.regulator or states[r] is not TriState.NA:
                continue
            if profile.provenance[r] is Provenance.FROZEN:
                continue
            if abs(a.tau - tau_score(tv, s, expr[r])) < delta:
                value = a.value if s is a.sign else ~a.value
                out.append((r, value, f"with {a.regulator} under {a.target}"))
    return out


def find_confusions(graph: RegulatoryGraph, profile: BinaryProfile) -> list[tuple[str, tuple]]:
    """Defined targets whose regulators are all defined and all inconsistent with them."""
    states = profile.states
    out = []
    for t in graph.genes:
        tv = states[t]
        regs = graph.regulators_of(t)
        if not tv.defined or not regs:
            continue
        if any(not states[r].defined for r, _ in regs):
            continue
        if all(not consistent(tv, s, states[r]) for r, s in regs):
            key = (t, tv.value) + tuple((r, states[r].value) for r, _ in regs)
            out.append((t, key))
    return out


def _inconsistency_pass(st: _State) -> list[str]:
    view = st.profile()
    confusions = find_confusions(st.graph, view)
    reset: dict[str, None] = {}
    freeze: dict[str, None] = {}
    for t, key in confusions:
        involved = [t] + [r for r, _ in st.graph.regulators_of(t)]
        if not st.cfg.biomarkers_resettable:
            involved = [g for g in involved if g not in st.biomarkers]
        bucket = freeze if key in st.confusions else reset
        st.confusions.add(key)
        st.log.append(
            SweepEvent(st.sweep, "confusion", t, st.states[t], st.states[t], ",".join(
                f"{g}={v}" for g, v in key[2:]
            ))
        )
        for g in involved:
            bucket[g] = None
    touched = []
    for g in sorted(freeze):
        st.set(g, TriState.NA, Provenance.FROZEN, "freeze")
        touched.append(g)
    for g in sorted(reset):
        if g in freeze or st.frozen(g):
            continue
        st.set(g, TriState.NA, Provenance.REINITIALIZED, "reset")
        touched.append(g)
    return touched


def inconsistency_test(
    graph: RegulatoryGraph, profile: BinaryProfile, seen: set | None = None
) -> set[str]:
    """Stand-alone inconsistency pass; mutates ``profile`` and returns touched genes.

    ``seen`` carries confusion keys across calls so repeated confusions freeze.
    """
    st = _State(
        graph,
        {},
        BinarizerConfig(),
        profile.states,
        profile.provenance,
        frozenset(g for g, p in profile.provenance.items() if p is Provenance.BIOMARKER),
        profile.sweep_log,
        seen if seen is not None else set(),
        profile.sweeps,
    )
    return set(_inconsistency_pass(st))


# --- driver --------------------------------------------------------------


def binarize_normalized(
    graph: RegulatoryGraph,
    expr: Mapping[str, float | None],
    cfg: BinarizerConfig | None = None,
    markers: Mapping[str, TriState | bool] | None = None,
) -> BinaryProfile:
    """Run the sweep loop on an already-normalized expression vector."""
    cfg = cfg or BinarizerConfig()
    kappa, placeholders = neutral_fill(graph, expr)
    seed = initialize(kappa, cfg, markers, graph=graph, placeholders=placeholders)
    st = _State(
        graph,
        kappa,
        cfg,
        dict(seed.states),
        dict(seed.provenance),
        frozenset(g for g, p in seed.provenance.items() if p is Provenance.BIOMARKER),
        list(seed.sweep_log),
    )
    limit = cfg.sweeps_for(len(graph))
    while st.sweep < limit:
        st.sweep += 1
        changed = 0

        fwd = forward_step(graph, st.profile())
        changed += len(
            _apply_batch(st, [(g, v, "") for g, v in sorted(fwd.items())], Provenance.FORWARD, "forward")
        )

        back = backward_step(graph, st.profile(), kappa, cfg)
        proposals = [(a.regulator, a.value, f"from {a.target} tau={a.tau:.6g}") for a in back]
        applied = set(_apply_batch(st, proposals, Provenance.BACKWARD, "backward"))
        changed += len(applied)
        back = [a for a in back if a.regulator in applied and st.states[a.regulator] is a.value]

        harm = harmonize(graph, st.profile(), kappa, cfg.delta, back)
        changed += len(_apply_batch(st, harm, Provenance.HARMONIZED, "harmonize"))

        changed += len(_inconsistency_pass(st))
        if changed == 0:
            return st.profile()
    return st.profile(truncated=True)


def binarize(
    graph: RegulatoryGraph,
    raw: Mapping[str, float | None],
    cfg: BinarizerConfig | None = None,
    markers: Mapping[str, TriState | bool] | None = None,
) -> BinaryProfile:
    """Normalize a raw expression vector and binarize it against ``graph``.

    Only genes of the graph take part in normalization; extra entries are ignored.
    """
    cfg = cfg or BinarizerConfig()
    scoped = {g: raw[g] for g in graph.genes if g in raw}
    if len(graph) == 0:
        return BinaryProfile({}, {})
    expr = min_max_normalize(scoped, cfg.mode) if scoped else {}
    return binarize_normalized(graph, expr, cfg, markers)


__all__ = [
    "BinarizerConfig",
    "NormMode",
    "DegenerateScaleError",
    "NEUTRAL_FILL",
    "EPSILON_CAP",
    "min_max_normalize",
    "normalize_matrix",
    "neutral_fill",
    "initialize",
    "consistent",
    "consistent_value",
    "tau_score",
    "dominant_regulator",
    "forward_step",
    "backward_step",
    "harmonize",
    "find_confusions",
    "inconsistency_test",
    "binarize_normalized",
    "binarize",
    "BackAssignment",
]
