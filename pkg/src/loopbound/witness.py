"""Execution patterns realizing solver bounds from below.

A pattern is a regular-expression-like description of a trace family
over an SDL body: a sequence of letters (body indices) and starred
blocks, where nesting of stars is not allowed and expanding a pattern
repeats every starred block the same number of times t.  That uniform t
is what lets a single pattern realize a tau-polynomial bound for every
iteration count.

Patterns are synthesized from solver derivations:

* the identity is realized by the empty pattern,
* a body element by its own letter,
* a composition by concatenating the operands' patterns, and
* a generalization of an element realized by ``pi`` by
  ``(pi(1))* pi^n`` where ``pi(1)`` is ``pi`` with each starred block
  inlined once (star-free) and n is the arity.  The starred prefix
  accumulates the tau-free increments; the n trailing copies of ``pi``
  re-establish the tau-carrying monomials on top of what accumulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .sdl import Compose, Derivation, Generalize, Ident, Input


@dataclass(frozen=True)
class Letter:
    index: int  # position in the SDL body sequence


@dataclass(frozen=True)
class Star:
    """A starred block; its body is star-free (letter indices only)."""

    body: tuple[int, ...]


Atom = Union[Letter, Star]


@dataclass(frozen=True)
class Pattern:
    atoms: tuple[Atom, ...]

    @property
    def is_star_free(self) -> bool:
        return all(isinstance(a, Letter) for a in self.atoms)

    def flatten(self) -> tuple[int, ...]:
        """Substitute 1 for every star: the letter sequence pi(1)."""
        out: list[int] = []
        for a in self.atoms:
            if isinstance(a, Letter):
                out.append(a.index)
            else:
                out.extend(a.body)
        return tuple(out)

    def __str__(self) -> str:
        parts = []
        for a in self.atoms:
            if isinstance(a, Letter):
                parts.append(f"p{a.index}")
            else:
                parts.append("(" + " ".join(f"p{i}" for i in a.body) + ")*")
        return " ".join(parts)


EMPTY_PATTERN = Pattern(())


def derive_pattern(d: Derivation, arity: int) -> Pattern:
    """Turn a solver derivation into a realizing pattern."""
    if isinstance(d, Ident):
        return EMPTY_PATTERN
    if isinstance(d, Input):
        return Pattern((Letter(d.index),))
    if isinstance(d, Compose):
        first = derive_pattern(d.first, arity)
        second = derive_pattern(d.second, arity)
        return Pattern(first.atoms + second.atoms)
    if isinstance(d, Generalize):
        inner = derive_pattern(d.of, arity)
        flat = inner.flatten()
        if not flat:
            return EMPTY_PATTERN
        return Pattern((Star(flat),) + inner.atoms * arity)
    raise TypeError(f"unknown derivation {d!r}")


Trace = tuple[int, ...]


def expand_pattern(pattern: Pattern, t: int) -> Trace:
    """Expand with every starred block repeated exactly t times."""
    if t < 1:
        raise ValueError("t must be >= 1")
    out: list[int] = []
    for a in pattern.atoms:
        if isinstance(a, Letter):
            out.append(a.index)
        else:
            out.extend(a.body * t)
    return tuple(out)


def trace_length(pattern: Pattern, t: int) -> int:
    """|expand_pattern(pattern, t)| without building it (affine in t)."""
    fixed = sum(1 for a in pattern.atoms if isinstance(a, Letter))
    starred = sum(len(a.body) for a in pattern.atoms if isinstance(a, Star))
    return fixed + t * starred
