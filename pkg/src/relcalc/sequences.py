"""Finitely described sequences ``n ↦ relation`` (``n = 1, 2, ...``)."""

from dataclasses import dataclass
from fractions import Fraction
import math

from .relation import LinearRelation, direct_sum, scale_relation

SCHEDULES = ("n", "sqrt_n", "inv_n", "inv_sqrt_n", "const", "pow")


@dataclass(frozen=True, eq=False)
class Scaled:
    """``n ↦ c_n · base`` where scaling acts on values: ``{f, c_n f'}``."""

    base: LinearRelation
    schedule: str = "n"
    c: float = 1.0
    p: int = 1
    q: int = 1

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "pow" and self.q == 0:
            raise ValueError("pow schedule needs q != 0")

    def factor(self, n: int) -> float:
        s = self.schedule
        if s == "n":
            return float(n)
        if s == "sqrt_n":
            return math.sqrt(n)
        if s == "inv_n":
            return 1.0 / n
        if s == "inv_sqrt_n":
            return 1.0 / math.sqrt(n)
        if s == "const":
            return float(self.c)
        return float(n) ** float(Fraction(self.p, self.q))

    @property
    def trend(self) -> int:
        """+1 growing, -1 shrinking, 0 constant scale."""
        if self.schedule in ("n", "sqrt_n"):
            return 1
        if self.schedule in ("inv_n", "inv_sqrt_n"):
            return -1
        if self.schedule == "pow":
            e = Fraction(self.p, self.q)
            return (e > 0) - (e < 0)
        return 0

    def evaluate(self, n: int) -> LinearRelation:
        f = self.factor(n)
        return self.base if f == 1.0 else scale_relation(self.base, f)


@dataclass(frozen=True, eq=False)
class Explicit:
    """The listed terms, then stationary at the last one."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("explicit sequence needs at least one term")

    def evaluate(self, n: int) -> LinearRelation:
        return self.terms[min(n, len(self.terms)) - 1]


@dataclass(frozen=True, eq=False)
class DirectSum:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("direct sum needs at least one part")

    def evaluate(self, n: int) -> LinearRelation:
        return direct_sum(p.evaluate(n) for p in self.parts)


@dataclass(frozen=True, eq=False)
class Mapped:
    """Termwise image of another sequence under ``fn``."""

    seq: object
    fn: object

    def evaluate(self, n: int):
        return self.fn(self.seq.evaluate(n))


SequenceSpec = (Scaled, Explicit, DirectSum, Mapped)
