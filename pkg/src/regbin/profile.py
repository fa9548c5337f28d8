"""Tri-state binary profiles shared by the binarizer and the ODE harness."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class TriState(enum.Enum):
    ZERO = "0"
    ONE = "1"
    NA = "NA"

    @property
    def defined(self) -> bool:
        return self is not TriState.NA

    def __invert__(self) -> "TriState":
        if self is TriState.NA:
            raise ValueError("cannot negate NA")
        return TriState.ZERO if self is TriState.ONE else TriState.ONE

    def as_bool(self) -> bool | None:
        return None if self is TriState.NA else self is TriState.ONE

    @classmethod
    def from_bool(cls, value: bool | None) -> "TriState":
        if value is None:
            return cls.NA
        return cls.ONE if value else cls.ZERO

    @classmethod
    def parse(cls, token: str) -> "TriState":
        t = token.strip().lower()
        if t in {"1", "true", "t", "one"}:
            return cls.ONE
        if t in {"0", "false", "f", "zero"}:
            return cls.ZERO
        if t in {"na", "none", "nan", ""}:
            return cls.NA
        raise ValueError(f"not a tri-state value: {token!r}")


class Provenance(enum.Enum):
    EXTREME = "extreme"
    BIOMARKER = "biomarker"
    FORWARD = "forward"
    BACKWARD = "backward"
    HARMONIZED = "harmonized"
    REINITIALIZED = "reinitialized"
    FROZEN = "frozen"
    UNASSIGNED = "unassigned"
    THRESHOLD = "threshold"


# provenance tags that go with an NA state
NA_PROVENANCE = frozenset({Provenance.UNASSIGNED, Provenance.REINITIALIZED, Provenance.FROZEN})


@dataclass(frozen=True)
class SweepEvent:
    sweep: int
    phase: str
    gene: str
    old: TriState
    new: TriState
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "sweep": self.sweep,
            "phase": self.phase,
            "gene": self.gene,
            "old": self.old.value,
            "new": self.new.value,
            "detail": self.detail,
        }


@dataclass
class BinaryProfile:
    states: dict[str, TriState]
    provenance: dict[str, Provenance]
    sweep_log: list[SweepEvent] = field(default_factory=list)
    sweeps: int = 0
    truncated: bool = False

    @property
    def genes(self) -> tuple[str, ...]:
        return tuple(sorted(self.states))

    def __getitem__(self, gene: str) -> TriState:
        return self.states[gene]

    def values(self, genes: Sequence[str] | None = None) -> tuple[TriState, ...]:
        return tuple(self.states[g] for g in (genes or self.genes))

    def bools(self, genes: Sequence[str] | None = None) -> tuple[bool | None, ...]:
        """Profile as True/False/None, in ``genes`` order (default: sorted)."""
        return tuple(s.as_bool() for s in self.values(genes))

    def na_genes(self) -> tuple[str, ...]:
        return tuple(g for g in self.genes if self.states[g] is TriState.NA)

    def check(self) -> None:
        """Raise AssertionError if a provenance tag contradicts its state."""
        for g, s in self.states.items():
            p = self.provenance[g]
            if (s is TriState.NA) != (p in NA_PROVENANCE):
                raise AssertionError(f"{g}: state {s.value} with provenance {p.value}")

    @classmethod
    def from_states(
        cls, states: Mapping[str, TriState | bool | None], provenance: Provenance = Provenance.THRESHOLD
    ) -> "BinaryProfile":
        conv = {
            g: v if isinstance(v, TriState) else TriState.from_bool(v) for g, v in states.items()
        }
        prov = {g: provenance if v.defined else Provenance.UNASSIGNED for g, v in conv.items()}
        return cls(dict(sorted(conv.items())), dict(sorted(prov.items())))

    def to_dict(self, include_log: bool = False) -> dict:
        out = {
            "states": {g: self.states[g].value for g in self.genes},
            "provenance": {g: self.provenance[g].value for g in self.genes},
            "sweeps": self.sweeps,
            "truncated": self.truncated,
        }
        if include_log:
            out["sweep_log"] = [e.to_dict() for e in self.sweep_log]
        return out


def profile_from_bools(genes: Iterable[str], values: Iterable[bool | None]) -> BinaryProfile:
    return BinaryProfile.from_states(dict(zip(genes, values)))
