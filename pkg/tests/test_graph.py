import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from regbin import fixtures
from regbin.graph import (
    And,
    BooleanNetwork,
    GraphParseError,
    InteractionSign,
    Not,
    Or,
    Var,
    evaluate,
    interaction_graph_of,
    literals,
    parse_boolean_network,
    parse_graph,
    regulators_of,
    serialize_graph,
    serialize_network,
)

from strategies import GENE_POOL, sign_pure_exprs, signed_graphs

ACT, INH = InteractionSign.ACTIVATOR, InteractionSign.INHIBITOR


def test_two_edge_document():
    g = parse_graph("EGFR + ERK12\nMDM2 - TP53")
    assert len(g.genes) == 4 and len(g.edges) == 2
    assert g.sign("EGFR", "ERK12") is ACT
    assert g.sign("MDM2", "TP53") is INH


def test_empty_document():
    g = parse_graph("")
    assert g.genes == () and g.edges == ()


def test_comments_blank_lines_and_isolated_gene():
    g = parse_graph("# header\n\nA + B  # trailing\nC\n")
    assert g.genes == ("A", "B", "C")
    assert g.inputs() == ("A", "C")


@pytest.mark.parametrize(
    "text,reason",
    [
        ("A + B\nA - B", "duplicate edge"),
        ("A * B", "unknown sign"),
        ("A +", "dangling endpoint"),
        ("A + B C", "dangling endpoint"),
    ],
)
def test_graph_errors_carry_line(text, reason):
    with pytest.raises(GraphParseError) as ei:
        parse_graph(text)
    assert reason in str(ei.value)
    assert ei.value.line == len(text.splitlines())


def test_line_order_does_not_matter():
    lines = fixtures.text("breast_fig6.edges").splitlines()
    a = parse_graph("\n".join(lines))
    random.Random(3).shuffle(lines)
    assert parse_graph("\n".join(lines)) == a


def test_breast_drawing_graph():
    g = fixtures.breast_interaction_graph()
    assert len(g.genes) == 13 and len(g.edges) == 16
    assert regulators_of(g, "BRCA1") == [("CCND1", INH), ("EGFR", INH)]
    assert sum(e.sign is INH for e in g.edges) == 7


def test_regulators_activators_first():
    g = parse_graph("z + t\na - t\nm + t")
    assert regulators_of(g, "t") == [("m", ACT), ("z", ACT), ("a", INH)]
    assert regulators_of(g, "z") == []
    with pytest.raises(KeyError):
        g.regulators_of("nope")


def test_parse_negation():
    net = parse_boolean_network("g3 = !g2")
    assert net.rule("g3") == Not(Var("g2"))
    assert net.rule("g2") is None and net.genes == ("g2", "g3")


def test_parse_nested_rule():
    net = parse_boolean_network("TP53 = !MDM2 & (BRCA1 | !PARP1)")
    assert net.rule("TP53") == And((Not(Var("MDM2")), Or((Var("BRCA1"), Not(Var("PARP1"))))))


def test_precedence_not_and_or():
    net = parse_boolean_network("x = a | !b & c")
    assert net.rule("x") == Or((Var("a"), And((Not(Var("b")), Var("c")))))


@pytest.mark.parametrize(
    "text,reason",
    [
        ("a = b & !b", "mixed polarity"),
        ("a = b\na = c", "defined twice"),
        ("a = (b & c", "parenthes"),
        ("a = b & c)", "parenthes"),
        ("a = b &", "expression"),
        ("a b", "TARGET = EXPR"),
    ],
)
def test_network_errors(text, reason):
    with pytest.raises(GraphParseError, match=reason):
        parse_boolean_network(text)


def test_artificial_interaction_graph():
    g = interaction_graph_of(fixtures.network("artificial"))
    assert len(g.edges) == 8
    assert sum(e.sign is ACT for e in g.edges) == 6
    assert regulators_of(g, "g1") == [("g3", ACT), ("g4", ACT), ("g5", ACT)]
    assert g.sign("g4", "g5") is INH and g.sign("g2", "g3") is INH


def test_single_rule_graph():
    g = interaction_graph_of(parse_boolean_network("b = a"))
    assert [(e.source, e.target, e.sign) for e in g.edges] == [("a", "b", ACT)]


def test_breast_network_graph_by_literal_scan():
    net = fixtures.network("breast_cancer")
    by_hand = set()
    for target, expr in net.rules.items():
        for name, neg in literals(expr):
            by_hand.add((name, target, INH if neg else ACT))
    g = interaction_graph_of(net)
    assert {(e.source, e.target, e.sign) for e in g.edges} == by_hand
    assert len(by_hand) == 21
    assert len(net.genes) == 13


def test_breast_network_and_drawing_disagree_on_egfr_brca1():
    derived = interaction_graph_of(fixtures.network("breast_cancer"))
    drawn = fixtures.breast_interaction_graph()
    assert derived.sign("BRCA1", "EGFR") is INH and derived.sign("EGFR", "BRCA1") is None
    assert drawn.sign("EGFR", "BRCA1") is INH


def test_self_loop_accepted():
    g = interaction_graph_of(parse_boolean_network("a = a & !b"))
    assert g.sign("a", "a") is ACT


@given(signed_graphs())
def test_graph_round_trip(g):
    assert parse_graph(serialize_graph(g)) == g


@st.composite
def networks(draw):
    n = draw(st.integers(1, 6))
    genes = GENE_POOL[:n]
    rules = {}
    for t in genes:
        if draw(st.booleans()):
            k = draw(st.integers(1, min(4, n)))
            names = draw(st.permutations(genes))[:k]
            rules[t] = draw(sign_pure_exprs(tuple(names)))
    return BooleanNetwork(rules, genes)


@given(networks())
def test_network_round_trip(net):
    again = parse_boolean_network(serialize_network(net))
    assert again.rules == net.rules
    assert interaction_graph_of(again) == interaction_graph_of(net)


@given(networks(), st.randoms(use_true_random=False))
def test_derived_graph_independent_of_line_order(net, rnd):
    lines = serialize_network(net).splitlines()
    rnd.shuffle(lines)
    assert interaction_graph_of(parse_boolean_network("\n".join(lines))) == interaction_graph_of(net)


@given(networks())
def test_edges_match_literals(net):
    g = interaction_graph_of(net)
    edge_set = {(e.source, e.target, e.sign) for e in g.edges}
    lits = {
        (name, t, INH if neg else ACT) for t, ex in net.rules.items() for name, neg in literals(ex)
    }
    assert edge_set == lits


def test_large_network_literal_scan():
    rnd = random.Random(11)
    genes = [f"n{i}" for i in range(32)]
    lines = []
    for t in genes:
        regs = rnd.sample(genes, rnd.randint(1, 4))
        terms = [("!" if rnd.random() < 0.4 else "") + r for r in regs]
        lines.append(f"{t} = " + (" & " if rnd.random() < 0.5 else " | ").join(terms))
    net = parse_boolean_network("\n".join(lines))
    g = interaction_graph_of(net)
    assert len(g.edges) == sum(len(set(dict(literals(e)))) for e in net.rules.values())


def test_evaluate_and_step():
    net = fixtures.network("artificial")
    state = {"g1": False, "g2": False, "g3": True, "g4": False, "g5": True}
    assert net.step(state) == state
    assert evaluate(net.rule("g5"), {"g3": True, "g4": True}) is False
