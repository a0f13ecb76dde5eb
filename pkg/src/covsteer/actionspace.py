"""Knob-based action spaces.

An action space is an ordered list of knobs. Each knob is either a
continuous interval [lo, hi] or a finite set of discrete values, and one
concrete action assigns one real number to every knob. Knob values
parameterize stimulus generation; the agents never transform them, so
discrete values round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class KnobSpec:
    """One factor of the action space: an interval or a finite value set."""

    name: str
    kind: str
    lo: float = 0.0
    hi: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("knob name must be a non-empty string")
        if self.kind == CONTINUOUS:
            lo, hi = float(self.lo), float(self.hi)
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError(f"knob {self.name!r}: bounds must be finite")
            if not lo < hi:
                raise ValueError(f"knob {self.name!r}: lo must be < hi")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
            object.__setattr__(self, "values", ())
        elif self.kind == DISCRETE:
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ValueError(f"knob {self.name!r}: discrete value set is empty")
            if len(set(vals)) != len(vals):
                raise ValueError(f"knob {self.name!r}: duplicate discrete values")
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "lo", 0.0)
            object.__setattr__(self, "hi", 0.0)
        else:
            raise ValueError(f"knob {self.name!r}: unknown kind {self.kind!r}")

    @classmethod
    def continuous(cls, name: str, lo: float, hi: float) -> "KnobSpec":
        return cls(name=name, kind=CONTINUOUS, lo=lo, hi=hi)

    @classmethod
    def discrete(cls, name: str, values) -> "KnobSpec":
        return cls(name=name, kind=DISCRETE, values=tuple(values))


@dataclass(frozen=True)
class ActionSpace:
    """Ordered, immutable collection of knobs; fixed for an environment's lifetime."""

    knobs: tuple[KnobSpec, ...]

    def __post_init__(self):
        knobs = tuple(self.knobs)
        if not knobs:
            raise ValueError("action space needs at least one knob")
        names = [k.name for k in knobs]
        if len(set(names)) != len(names):
            raise ValueError("knob names must be unique")
        object.__setattr__(self, "knobs", knobs)

    def __len__(self) -> int:
        return len(self.knobs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(k.name for k in self.knobs)


@dataclass(frozen=True)
class Action:
    """Concrete knob assignment, positionally matched to a space's knobs."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class Violation:
    """One failed membership check; knob is None for a length mismatch."""

    knob: int | None
    message: str


def validate(space: ActionSpace, action: Action) -> list[Violation]:
    """Check an action against a space; an empty list means the action is valid."""
    if len(action.values) != len(space):
        return [
            Violation(
                None,
                f"action has {len(action.values)} values, space has {len(space)} knobs",
            )
        ]
    out: list[Violation] = []
    for i, (knob, v) in enumerate(zip(space.knobs, action.values)):
        if knob.kind == CONTINUOUS:
            if not (knob.lo <= v <= knob.hi):
                out.append(
                    Violation(i, f"knob {i} ({knob.name}): {v!r} not in [{knob.lo}, {knob.hi}]")
                )
        else:
            if v not in knob.values:
                out.append(
                    Violation(i, f"knob {i} ({knob.name}): {v!r} not in value set")
                )
    return out


def sample_uniform(space: ActionSpace, rng: np.random.Generator) -> Action:
    """Draw one action uniformly: U[lo, hi] per interval, equiprobable per value set."""
    vals = []
    for knob in space.knobs:
        if knob.kind == CONTINUOUS:
            vals.append(float(rng.uniform(knob.lo, knob.hi)))
        else:
            vals.append(knob.values[int(rng.integers(len(knob.values)))])
    return Action(tuple(vals))
