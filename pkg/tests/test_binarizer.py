import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regbin import fixtures
from regbin.binarizer import (
    BackAssignment,
    BinarizerConfig,
    DegenerateScaleError,
    NormMode,
    backward_step,
    binarize,
    binarize_normalized,
    consistent,
    find_confusions,
    forward_step,
    harmonize,
    inconsistency_test,
    initialize,
    min_max_normalize,
    neutral_fill,
    normalize_matrix,
    tau_score,
)
from regbin.graph import Edge, InteractionSign, RegulatoryGraph, interaction_graph_of, parse_graph
from regbin.profile import BinaryProfile, Provenance, TriState

from strategies import signed_graphs

ACT, INH = InteractionSign.ACTIVATOR, InteractionSign.INHIBITOR
ZERO, ONE, NA = TriState.ZERO, TriState.ONE, TriState.NA


def profile(states, prov=None):
    prov = prov or {g: (Provenance.UNASSIGNED if s is NA else Provenance.EXTREME) for g, s in states.items()}
    return BinaryProfile(dict(states), dict(prov))


def star(target, regs):
    """Graph with ``regs`` = [(name, sign)] all pointing at ``target``."""
    return RegulatoryGraph([target], [Edge(r, target, s) for r, s in regs])


# --- normalization -------------------------------------------------------


def test_minmax_affine():
    assert min_max_normalize({"a": 2, "b": 4, "c": 6}) == {"a": 0.0, "b": 0.5, "c": 1.0}


def test_minmax_rnaseq_row():
    row = fixtures.rnaseq_table().rows[0]
    out = min_max_normalize(row)
    assert out["ERK12"] is None
    assert out["PTEN"] == 1.0 and out["BCL2"] == 0.0
    for g, v in row.items():
        if v is not None:
            assert out[g] == pytest.approx((v - 0.2591) / (30.655 - 0.2591), abs=1e-12)


def test_minmax_degenerate():
    with pytest.raises(DegenerateScaleError):
        min_max_normalize({"a": 3.0}, NormMode.PER_GENE)
    with pytest.raises(DegenerateScaleError):
        min_max_normalize({"a": 1.0, "b": 1.0})


def test_matrix_modes():
    rows = [{"a": 0.0, "b": 10.0}, {"a": 5.0, "b": 20.0}]
    assert normalize_matrix(rows, "global") == [{"a": 0.0, "b": 0.5}, {"a": 0.25, "b": 1.0}]
    assert normalize_matrix(rows, "per-gene") == [{"a": 0.0, "b": 0.0}, {"a": 1.0, "b": 1.0}]
    assert normalize_matrix(rows, "per-sample") == [{"a": 0.0, "b": 1.0}, {"a": 0.0, "b": 1.0}]


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=2, max_size=20))
def test_minmax_range(vals):
    if len(set(vals)) < 2:
        return
    raw = {f"g{i}": v for i, v in enumerate(vals)}
    out = min_max_normalize(raw)
    assert all(0.0 <= v <= 1.0 for v in out.values())
    assert out[min(raw, key=raw.get)] == 0.0
    assert out[max(raw, key=raw.get)] == 1.0


def test_neutral_fill():
    g = parse_graph("a + b\nc - b")
    filled, ph = neutral_fill(g, {"a": 0.2, "b": float("nan")})
    assert filled == {"a": 0.2, "b": 0.5, "c": 0.5}
    assert ph == {"b", "c"}


# --- initialization ------------------------------------------------------


def test_initialize_extremes_and_markers():
    cfg = BinarizerConfig(epsilon=0.05)
    p = initialize({"lo": 0.03, "hi": 0.97, "mid": 0.5, "mk": 0.5}, cfg, {"mk": ONE})
    assert p["lo"] is ZERO and p["hi"] is ONE and p["mid"] is NA
    assert p["mk"] is ONE and p.provenance["mk"] is Provenance.BIOMARKER
    assert p.provenance["lo"] is Provenance.EXTREME


def test_marker_overrides_threshold():
    p = initialize({"a": 0.0}, BinarizerConfig(), {"a": True})
    assert p["a"] is ONE


def test_marker_outside_graph_rejected():
    with pytest.raises(KeyError):
        initialize({"a": 0.5}, BinarizerConfig(), {"zz": ONE}, graph=RegulatoryGraph(["a"]))


def test_placeholder_never_thresholded():
    p = initialize({"a": 0.0, "b": 1.0}, BinarizerConfig(), graph=RegulatoryGraph(["a", "b"]), placeholders={"a"})
    assert p["a"] is NA and p["b"] is ONE


@pytest.mark.parametrize("eps", [0.06, 0.2, -0.01])
def test_epsilon_cap(eps):
    with pytest.raises(ValueError):
        BinarizerConfig(epsilon=eps)


def test_config_round_trip():
    cfg = BinarizerConfig(epsilon=0.01, delta=0.1, max_sweeps=7, mode=NormMode.PER_SAMPLE, relaxed_backprop=True)
    assert BinarizerConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        BinarizerConfig.from_dict({"epsilon": 0.01, "bogus": 1})


# --- consistency and tau -------------------------------------------------


def test_consistency_table():
    table = {
        (t, s, r): consistent(t, s, r)
        for t in (ZERO, ONE)
        for s in (ACT, INH)
        for r in (ZERO, ONE)
    }
    truthy = {k for k, v in table.items() if v}
    assert truthy == {(ONE, ACT, ONE), (ZERO, INH, ONE), (ZERO, ACT, ZERO), (ONE, INH, ZERO)}
    with pytest.raises(ValueError):
        consistent(NA, ACT, ONE)


@pytest.mark.parametrize(
    "tv,sign,kappa,want",
    [(ONE, ACT, 0.8, 0.2), (ONE, INH, 0.8, 0.8), (ZERO, INH, 0.9, 0.1), (ZERO, ACT, 0.3, 0.3)],
)
def test_tau_examples(tv, sign, kappa, want):
    assert tau_score(tv, sign, kappa) == pytest.approx(want, abs=1e-15)


# --- forward -------------------------------------------------------------


def test_forward_one():
    g = star("t", [("a1", ACT), ("a2", ACT), ("i1", INH), ("i2", INH)])
    p = profile({"t": NA, "a1": ONE, "a2": ONE, "i1": ZERO, "i2": ZERO})
    assert forward_step(g, p) == {"t": ONE}


def test_forward_zero():
    g = star("t", [("a1", ACT), ("i1", INH)])
    assert forward_step(g, profile({"t": NA, "a1": ZERO, "i1": ONE})) == {"t": ZERO}


def test_forward_mixed_or_partial():
    g = star("t", [("a1", ACT), ("a2", ACT)])
    assert forward_step(g, profile({"t": NA, "a1": ONE, "a2": ZERO})) == {}
    assert forward_step(g, profile({"t": NA, "a1": ONE, "a2": NA})) == {}


def test_forward_skips_inputs():
    g = RegulatoryGraph(["x"])
    assert forward_step(g, profile({"x": NA})) == {}


def _monotone_tables(k):
    """Truth tables (tuple indexed by bitmask) of monotone increasing functions
    on k variables that depend on every variable."""
    n = 1 << k
    out = []
    for bits in range(1 << n):
        tab = tuple((bits >> x) & 1 for x in range(n))
        if any(tab[x] > tab[x | (1 << i)] for x in range(n) for i in range(k)):
            continue
        if all(any(tab[x] != tab[x ^ (1 << i)] for x in range(n)) for i in range(k)):
            out.append(tab)
    return out


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_forward_sound_for_every_sign_monotone_function(k):
    mono = _monotone_tables(k)
    assert mono  # never vacuous
    regs = [f"r{i}" for i in range(k)]
    for inh_mask in range(1 << k):
        signs = [INH if inh_mask >> i & 1 else ACT for i in range(k)]
        g = star("t", list(zip(regs, signs)))
        # a function of the signed regulators is g(x xor inh_mask) with g monotone
        for cfg in range(1 << k):
            states = {r: (ONE if cfg >> i & 1 else ZERO) for i, r in enumerate(regs)}
            states["t"] = NA
            got = forward_step(g, profile(states)).get("t")
            if got is None:
                continue
            want = 1 if got is ONE else 0
            assert all(tab[cfg ^ inh_mask] == want for tab in mono)


# --- backward ------------------------------------------------------------


def test_backward_picks_most_expressed_activator():
    g = star("t", [("a", ACT), ("b", ACT)])
    p = profile({"t": ONE, "a": NA, "b": NA})
    (ba,) = backward_step(g, p, {"t": 1.0, "a": 0.9, "b": 0.4}, BinarizerConfig())
    assert (ba.regulator, ba.value) == ("a", ONE)


def test_backward_inhibitor_wins():
    g = star("t", [("a", ACT), ("i", INH)])
    p = profile({"t": ONE, "a": NA, "i": NA})
    (ba,) = backward_step(g, p, {"t": 1.0, "a": 0.3, "i": 0.1}, BinarizerConfig())
    assert (ba.regulator, ba.value) == ("i", ZERO)
    assert ba.tau == pytest.approx(0.1)


def test_backward_four_activators():
    g = star("t", [(f"a{i}", ACT) for i in range(4)])
    kappa = {"t": 1.0, "a0": 0.2, "a1": 0.7, "a2": 0.55, "a3": 0.1}
    p = profile({"t": ONE, **{f"a{i}": NA for i in range(4)}})
    (ba,) = backward_step(g, p, kappa, BinarizerConfig())
    assert ba.regulator == "a1" and ba.value is ONE


def test_backward_strict_needs_all_na_relaxed_does_not():
    g = star("t", [("a", ACT), ("b", ACT)])
    p = profile({"t": ONE, "a": ZERO, "b": NA})
    kappa = {"t": 1.0, "a": 0.0, "b": 0.6}
    assert backward_step(g, p, kappa, BinarizerConfig()) == []
    (ba,) = backward_step(g, p, kappa, BinarizerConfig(relaxed_backprop=True))
    assert (ba.regulator, ba.value) == ("b", ONE)


def test_backward_tie_prefers_activator_then_name():
    g = star("t", [("z", ACT), ("m", INH), ("b", ACT)])
    p = profile({"t": ONE, "z": NA, "m": NA, "b": NA})
    # all three have tau 0.5
    (ba,) = backward_step(g, p, {"t": 1.0, "z": 0.5, "m": 0.5, "b": 0.5}, BinarizerConfig())
    assert ba.regulator == "b"


@settings(max_examples=200)
@given(
    st.sampled_from([ZERO, ONE]),
    st.lists(st.tuples(st.sampled_from([ACT, INH]), st.floats(0, 1)), min_size=1, max_size=8),
)
def test_tau_argmin_oracle(tv, regs):
    names = [f"r{i}" for i in range(len(regs))]
    g = star("t", [(n, s) for n, (s, _) in zip(names, regs)])
    kappa = {n: k for n, (_, k) in zip(names, regs)}
    kappa["t"] = 1.0
    p = profile({"t": tv, **{n: NA for n in names}})
    (ba,) = backward_step(g, p, kappa, BinarizerConfig())
    # exhaustive scan with the scoring written out independently
    b = 1 if tv is ONE else 0
    scores = []
    for n, (s, k) in zip(names, regs):
        tau = (b * (1 - k) + k * (1 - b)) if s is ACT else (b * k + (1 - k) * (1 - b))
        scores.append((tau, 0 if s is ACT else 1, n))
    best = min(scores)
    assert ba.regulator == best[2]
    want = tv if dict(zip(names, [s for s, _ in regs]))[ba.regulator] is ACT else ~tv
    assert ba.value is want


# --- harmonize -----------------------------------------------------------


def _harm(sign_j, kappa_j, delta=0.05):
    g = star("t", [("i", ACT), ("j", sign_j)])
    p = profile({"t": ONE, "i": ONE, "j": NA})
    a = BackAssignment("t", "i", ACT, ONE, 0.10)
    return harmonize(g, p, {"t": 1.0, "i": 0.9, "j": kappa_j}, delta, [a])


def test_harmonize_cooperative():
    # activator j with kappa 0.88 -> tau 0.12
    (r, v, _), = _harm(ACT, 0.88)
    assert (r, v) == ("j", ONE)


def test_harmonize_opposite_sign():
    # inhibitor j with kappa 0.12 -> tau 0.12 under target One
    (r, v, _), = _harm(INH, 0.12)
    assert (r, v) == ("j", ZERO)


def test_harmonize_outside_delta():
    assert _harm(ACT, 0.7) == []


# --- inconsistency -------------------------------------------------------


def test_confusion_resets_target_and_regulators():
    regs = [("a1", ACT), ("i1", INH), ("a2", ACT), ("i2", INH)]
    g = star("t", regs)
    p = profile({"t": ZERO, "a1": ONE, "i1": ZERO, "a2": ONE, "i2": ZERO})
    assert inconsistency_test(g, p) == {"t", "a1", "i1", "a2", "i2"}
    assert all(s is NA for s in p.states.values())
    assert all(pr is Provenance.REINITIALIZED for pr in p.provenance.values())


def test_no_reset_with_one_consistent_regulator():
    g = star("t", [("a", ACT), ("b", ACT)])
    p = profile({"t": ONE, "a": ONE, "b": ZERO})
    assert find_confusions(g, p) == []
    assert inconsistency_test(g, p) == set()


def test_repeated_confusion_freezes():
    g = star("t", [("a", ACT)])
    seen: set = set()
    p = profile({"t": ONE, "a": ZERO})
    inconsistency_test(g, p, seen)
    assert p.provenance["t"] is Provenance.REINITIALIZED
    p2 = profile({"t": ONE, "a": ZERO})
    inconsistency_test(g, p2, seen)
    assert p2.provenance == {"t": Provenance.FROZEN, "a": Provenance.FROZEN}


def test_cyclic_fixture_freezes_and_terminates():
    # a -> b (+), b -| a, b -> c (+); c starts at 0.
    # sweep 1: c=0 back-propagates b=0
    # sweep 2: b=0 forces a=1, which contradicts b -> reset a, b
    # sweep 3-4: the same two steps replay, same confusion -> freeze a, b
    # sweep 5: nothing left to do
    g = parse_graph("a + b\nb - a\nb + c")
    p = binarize_normalized(g, {"a": 0.6, "b": 0.3, "c": 0.0})
    assert p.states == {"a": NA, "b": NA, "c": ZERO}
    assert p.provenance["a"] is Provenance.FROZEN and p.provenance["b"] is Provenance.FROZEN
    assert p.sweeps == 5 and not p.truncated
    phases = [(e.sweep, e.phase, e.gene) for e in p.sweep_log]
    assert (2, "reset", "b") in phases and (4, "freeze", "b") in phases


def test_biomarkers_survive_resets_by_default():
    g = star("t", [("a", ACT)])
    p = binarize_normalized(g, {"t": 1.0, "a": 0.0}, markers={"a": ZERO})
    assert p["a"] is ZERO and p.provenance["a"] is Provenance.BIOMARKER
    p2 = binarize_normalized(g, {"t": 1.0, "a": 0.0}, BinarizerConfig(biomarkers_resettable=True), {"a": ZERO})
    assert p2.provenance["a"] in (Provenance.REINITIALIZED, Provenance.FROZEN)


# --- full algorithm ------------------------------------------------------


def test_artificial_late_snapshot_values():
    g = interaction_graph_of(fixtures.network("artificial"))
    p = binarize(g, {"g1": 0, "g2": 0, "g3": 6, "g4": 0, "g5": 8})
    assert p.values(["g1", "g2", "g3", "g4", "g5"]) == (ZERO, ZERO, ONE, ZERO, ONE)


def test_all_low_no_edges():
    g = RegulatoryGraph(["a", "b", "c"])
    p = binarize_normalized(g, {"a": 0.0, "b": 0.01, "c": 0.05})
    assert set(p.states.values()) == {ZERO}


def test_missing_gene_left_na():
    g = parse_graph("a + b\nc - b")
    p = binarize(g, {"a": 5.0, "b": 1.0})
    assert "c" not in {e.gene for e in p.sweep_log if e.phase == "init"}
    assert p.provenance["c"] is not Provenance.EXTREME


def test_truncation_flag():
    g = parse_graph("a + b\nb + c")
    p = binarize_normalized(g, {"a": 1.0, "b": 0.5, "c": 0.5}, BinarizerConfig(max_sweeps=1))
    assert p.truncated
    full = binarize_normalized(g, {"a": 1.0, "b": 0.5, "c": 0.5})
    assert not full.truncated and full["c"] is ONE


def _fixture_cases():
    for name in ("artificial", "oscillator", "breast_cancer"):
        g = interaction_graph_of(fixtures.network(name))
        for _, row in fixtures.reference_snapshots(name):
            yield name, g, row
    g6 = fixtures.breast_interaction_graph()
    for _, row in fixtures.rnaseq_table():
        yield "rnaseq", g6, row


@pytest.mark.parametrize("name,g,row", list(_fixture_cases()))
def test_fixtures_deterministic_and_bounded(name, g, row):
    a = binarize(g, row)
    b = binarize(g, dict(reversed(list(row.items()))))
    assert a == b
    assert not a.truncated and a.sweeps <= 10 * len(g.genes)
    a.check()


def _random_expr(draw, genes):
    return {g: draw(st.one_of(st.floats(0, 100), st.just(float("nan")))) for g in genes}


@settings(max_examples=200)
@given(signed_graphs(max_genes=8), st.data())
def test_post_termination_consistency_or_frozen(g, data):
    expr = _random_expr(data.draw, g.genes)
    finite = {v for v in expr.values() if not math.isnan(v)}
    if len(finite) < 2:
        return
    p = binarize(g, expr)
    assert not p.truncated and p.sweeps <= 10 * len(g.genes)
    p.check()
    for t in g.genes:
        regs = g.regulators_of(t)
        if not p[t].defined or not regs or any(not p[r].defined for r, _ in regs):
            continue
        ok = any(consistent(p[t], s, p[r]) for r, s in regs)
        assert ok or p.provenance[t] is Provenance.FROZEN, t
    # extremes change only through a logged reset/freeze
    init = {e.gene: e.new for e in p.sweep_log if e.phase == "init"}
    touched = {e.gene for e in p.sweep_log if e.phase in ("reset", "freeze")}
    for gene, v in init.items():
        assert p[gene] is v or gene in touched


@settings(max_examples=50)
@given(signed_graphs(max_genes=6), st.data())
def test_deterministic_including_log(g, data):
    expr = _random_expr(data.draw, g.genes)
    if len({v for v in expr.values() if not math.isnan(v)}) < 2:
        return
    assert binarize(g, expr) == binarize(g, expr)


def test_monotone_function_counts():
    # non-degenerate monotone functions on 1..4 variables: 1, 2, 9, 114
    assert [len(_monotone_tables(k)) for k in (1, 2, 3, 4)] == [1, 2, 9, 114]
