"""Signed regulatory graphs and Boolean networks.

Two text formats are understood:

* edge lists, one ``SOURCE <sign> TARGET`` per line with sign ``+`` or ``-``
  (a line holding a single name declares an isolated gene);
* logic documents, one ``TARGET = EXPR`` per line using ``!``, ``&``, ``|``
  and parentheses.

``#`` starts a comment in both. All containers are immutable and iterate in
lexicographic gene order.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "InteractionSign",
    "Edge",
    "RegulatoryGraph",
    "Var",
    "Not",
    "And",
    "Or",
    "BoolExpr",
    "BooleanNetwork",
    "GraphParseError",
    "parse_graph",
    "parse_boolean_network",
    "serialize_graph",
    "serialize_network",
    "interaction_graph_of",
    "regulators_of",
    "literals",
    "evaluate",
]

_NAME_RE = re.compile(r"^[A-Za-z0-9_.:]+$")


class GraphParseError(ValueError):
    """Raised for malformed graph or network documents; carries the 1-based line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InteractionSign(enum.Enum):
    ACTIVATOR = "+"
    INHIBITOR = "-"

    @property
    def symbol(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "InteractionSign":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown sign token {token!r}") from None


@dataclass(frozen=True, order=True)
class Edge:
    source: str
    target: str
    sign: InteractionSign = field(compare=False)


def _check_name(name: str) -> str:
    if not name or not _NAME_RE.match(name):
        raise ValueError(f"invalid gene name {name!r}")
    return name


class RegulatoryGraph:
    """Genes plus signed directed edges, at most one edge per (source, target)."""

    __slots__ = ("_genes", "_edges", "_regs", "_targets")

    def __init__(self, genes: Iterable[str] = (), edges: Iterable[Edge] = ()):
        edges = list(edges)
        gene_set = {_check_name(g) for g in genes}
        seen: dict[tuple[str, str], Edge] = {}
        for e in edges:
            key = (e.source, e.target)
            if key in seen:
                raise ValueError(f"duplicate edge {e.source} -> {e.target}")
            seen[key] = e
            gene_set.add(_check_name(e.source))
            gene_set.add(_check_name(e.target))
        self._genes = tuple(sorted(gene_set))
        self._edges = tuple(sorted(seen.values()))
        regs: dict[str, list[tuple[str, InteractionSign]]] = {g: [] for g in self._genes}
        tgts: dict[str, list[tuple[str, InteractionSign]]] = {g: [] for g in self._genes}
        for e in self._edges:
            regs[e.target].append((e.source, e.sign))
            tgts[e.source].append((e.target, e.sign))
        key = lambda rs: (rs[1] is not InteractionSign.ACTIVATOR, rs[0])
        self._regs = {g: tuple(sorted(v, key=key)) for g, v in regs.items()}
        self._targets = {g: tuple(sorted(v)) for g, v in tgts.items()}

    @property
    def genes(self) -> tuple[str, ...]:
        return self._genes

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def __contains__(self, gene: object) -> bool:
        return gene in self._regs

    def __len__(self) -> int:
        return len(self._genes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegulatoryGraph):
            return NotImplemented
        return self._genes == other._genes and [
            (e.source, e.target, e.sign) for e in self._edges
        ] == [(e.source, e.target, e.sign) for e in other._edges]

    def __hash__(self) -> int:
        return hash((self._genes, tuple((e.source, e.target, e.sign) for e in self._edges)))

    def __repr__(self) -> str:
        return f"RegulatoryGraph({len(self._genes)} genes, {len(self._edges)} edges)"

    def regulators_of(self, target: str) -> tuple[tuple[str, InteractionSign], ...]:
        """Regulators of ``target``, activators first, then by name."""
        try:
            return self._regs[target]
        except KeyError:
            raise KeyError(f"unknown gene {target!r}") from None

    def targets_of(self, source: str) -> tuple[tuple[str, InteractionSign], ...]:
        try:
            return self._targets[source]
        except KeyError:
            raise KeyError(f"unknown gene {source!r}") from None

    def sign(self, source: str, target: str) -> InteractionSign | None:
        for reg, s in self._regs.get(target, ()):
            if reg == source:
                return s
        return None

    def inputs(self) -> tuple[str, ...]:
        return tuple(g for g in self._genes if not self._regs[g])


def regulators_of(graph: RegulatoryGraph, target: str) -> list[tuple[str, InteractionSign]]:
    return list(graph.regulators_of(target))


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_graph(text: str) -> RegulatoryGraph:
    genes: set[str] = set()
    edges: dict[tuple[str, str], Edge] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 1:
            try:
                genes.add(_check_name(tokens[0]))
            except ValueError as exc:
                raise GraphParseError(str(exc), lineno) from None
            continue
        if len(tokens) != 3:
            raise GraphParseError(
                f"expected 'SOURCE <+|-> TARGET', got {len(tokens)} tokens (dangling endpoint?)",
                lineno,
            )
        src, tok, tgt = tokens
        try:
            sign = InteractionSign.from_token(tok)
            _check_name(src)
            _check_name(tgt)
        except ValueError as exc:
            raise GraphParseError(str(exc), lineno) from None
        if (src, tgt) in edges:
            raise GraphParseError(f"duplicate edge {src} -> {tgt}", lineno)
        edges[(src, tgt)] = Edge(src, tgt, sign)
    return RegulatoryGraph(genes, edges.values())


def serialize_graph(graph: RegulatoryGraph) -> str:
    lines = [f"{e.source} {e.sign.symbol} {e.target}" for e in graph.edges]
    connected = {e.source for e in graph.edges} | {e.target for e in graph.edges}
    lines += [g for g in graph.genes if g not in connected]
    return "\n".join(lines) + ("\n" if lines else "")


# --- Boolean expressions -------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "BoolExpr"


@dataclass(frozen=True)
class And:
    args: tuple["BoolExpr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["BoolExpr", ...]


BoolExpr = Union[Var, Not, And, Or]


def literals(expr: BoolExpr, negated: bool = False) -> Iterator[tuple[str, bool]]:
    """Yield ``(gene, negated)`` for every variable occurrence, tracking NOT parity."""
    if isinstance(expr, Var):
        yield expr.name, negated
    elif isinstance(expr, Not):
        yield from literals(expr.arg, not negated)
    else:
        for a in expr.args:
            yield from literals(a, negated)


def evaluate(expr: BoolExpr, state: Mapping[str, bool]) -> bool:
    if isinstance(expr, Var):
        return bool(state[expr.name])
    if isinstance(expr, Not):
        return not evaluate(expr.arg, state)
    if isinstance(expr, And):
        return all(evaluate(a, state) for a in expr.args)
    return any(evaluate(a, state) for a in expr.args)


def _format(expr: BoolExpr, parent: int = 0) -> str:
    # precedence: Or=1, And=2, Not/Var=3
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Not):
        return "!" + _format(expr.arg, 3)
    if isinstance(expr, And):
        s = " & ".join(_format(a, 2) for a in expr.args)
        return f"({s})" if parent > 2 else s
    s = " | ".join(_format(a, 1) for a in expr.args)
    return f"({s})" if parent > 1 else s


_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z0-9_.:]+)|(?P<op>[!&|()]))")


class _ExprParser:
    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.tokens: list[str] = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                raise GraphParseError(f"unexpected character {text[pos:].strip()[:1]!r}", lineno)
            self.tokens.append(m.group("name") or m.group("op"))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise GraphParseError("unexpected end of expression", self.lineno)
        self.i += 1
        return tok

    def parse(self) -> BoolExpr:
        if not self.tokens:
            raise GraphParseError("empty expression", self.lineno)
        expr = self.parse_or()
        if self.peek() is not None:
            tok = self.peek()
            msg = "unbalanced parentheses" if tok == ")" else f"unexpected token {tok!r}"
            raise GraphParseError(msg, self.lineno)
        return expr

    def parse_or(self) -> BoolExpr:
        args = [self.parse_and()]
        while self.peek() == "|":
            self.take()
            args.append(self.parse_and())
        return _flatten(Or, args)

    def parse_and(self) -> BoolExpr:
        args = [self.parse_not()]
        while self.peek() == "&":
            self.take()
            args.append(self.parse_not())
        return _flatten(And, args)

    def parse_not(self) -> BoolExpr:
        tok = self.take()
        if tok == "!":
            return Not(self.parse_not())
        if tok == "(":
            inner = self.parse_or()
            if self.peek() != ")":
                raise GraphParseError("unbalanced parentheses", self.lineno)
            self.take()
            return inner
        if tok in {")", "&", "|"}:
            raise GraphParseError(f"unexpected token {tok!r}", self.lineno)
        return Var(tok)


def _flatten(kind, args: list[BoolExpr]) -> BoolExpr:
    if len(args) == 1:
        return args[0]
    flat: list[BoolExpr] = []
    for a in args:
        flat.extend(a.args if isinstance(a, kind) else (a,))
    return kind(tuple(flat))


class BooleanNetwork:
    """Per-gene logic rules; genes without a rule are constant inputs."""

    __slots__ = ("_rules", "_genes")

    def __init__(self, rules: Mapping[str, BoolExpr], genes: Iterable[str] = ()):
        gene_set = {_check_name(g) for g in genes}
        for target, expr in rules.items():
            gene_set.add(_check_name(target))
            polarity: dict[str, bool] = {}
            for name, neg in literals(expr):
                _check_name(name)
                if polarity.setdefault(name, neg) != neg:
                    raise ValueError(f"mixed polarity of {name!r} in rule for {target!r}")
                gene_set.add(name)
        self._genes = tuple(sorted(gene_set))
        self._rules = {t: rules[t] for t in sorted(rules)}

    @property
    def genes(self) -> tuple[str, ...]:
        return self._genes

    @property
    def rules(self) -> Mapping[str, BoolExpr]:
        return dict(self._rules)

    def rule(self, gene: str) -> BoolExpr | None:
        return self._rules.get(gene)

    def __len__(self) -> int:
        return len(self._genes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BooleanNetwork):
            return NotImplemented
        return self._genes == other._genes and self._rules == other._rules

    def __hash__(self) -> int:
        return hash((self._genes, tuple(self._rules.items())))

    def __repr__(self) -> str:
        return f"BooleanNetwork({len(self._genes)} genes, {len(self._rules)} rules)"

    def step(self, state: Mapping[str, bool]) -> dict[str, bool]:
        """Synchronous update; rule-less genes keep their value."""
        return {
            g: evaluate(self._rules[g], state) if g in self._rules else bool(state[g])
            for g in self._genes
        }


def parse_boolean_network(text: str) -> BooleanNetwork:
    rules: dict[str, BoolExpr] = {}
    declared: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if "=" not in line and _NAME_RE.match(line):
            declared.add(line)  # bare name: an input gene no rule mentions
            continue
        if line.count("=") != 1:
            raise GraphParseError("expected 'TARGET = EXPR'", lineno)
        lhs, rhs = (s.strip() for s in line.split("="))
        if not lhs or not _NAME_RE.match(lhs):
            raise GraphParseError(f"invalid target {lhs!r}", lineno)
        if lhs in rules:
            raise GraphParseError(f"target {lhs!r} defined twice", lineno)
        expr = _ExprParser(rhs, lineno).parse()
        polarity: dict[str, bool] = {}
        for name, neg in literals(expr):
            if polarity.setdefault(name, neg) != neg:
                raise GraphParseError(f"mixed polarity of {name!r} in rule for {lhs!r}", lineno)
        rules[lhs] = expr
    return BooleanNetwork(rules, declared)


def serialize_network(net: BooleanNetwork) -> str:
    rules = net.rules
    lines = [f"{t} = {_format(e)}" for t, e in rules.items()]
    mentioned = set(rules) | {n for e in rules.values() for n, _ in literals(e)}
    lines += [g for g in net.genes if g not in mentioned]
    return "\n".join(lines) + ("\n" if lines else "")


def interaction_graph_of(net: BooleanNetwork) -> RegulatoryGraph:
    """Signed graph with one edge per (regulator, target) literal pair."""
    edges = []
    for target, expr in net.rules.items():
        seen: dict[str, bool] = {}
        for name, neg in literals(expr):
            seen.setdefault(name, neg)
        for name in sorted(seen):
            sign = InteractionSign.INHIBITOR if seen[name] else InteractionSign.ACTIVATOR
            edges.append(Edge(name, target, sign))
    return RegulatoryGraph(net.genes, edges)
