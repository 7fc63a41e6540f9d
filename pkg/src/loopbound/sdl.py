"""Disjunctive-loop solver.

A simple disjunctive loop (SDL) is a finite set of transitions, any of
which may fire at each iteration.  The solver computes, in the
saturated-coefficient domain, the least set that contains the identity
and the body transitions and is closed under

* composition (the closure step), and
* generalization of idempotent elements, which predicts how values
  accumulate across iterations by multiplying the tau-free
  self-dependent increments of an entry by the iteration counter tau.

Alongside, it classifies growth: whenever a produced element carries a
"doubling" monomial (entry i contains a monomial divisible by x_i other
than a bare coefficient-1 x_i), variable i provably grows faster than
any polynomial, its entry is masked with the absorbing SUPER marker in
every body member, and the solve restarts.  Flags accumulate, so there
are at most n restarts.  A budget on degree, set size and rounds is the
honest fallback for anything the classifier cannot settle.

Every produced element records a derivation (which inputs were composed
or generalized), which the witness machinery later turns into an
execution pattern realizing the bound from below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .poly import (
    SUPER,
    Coeff,
    Monomial,
    MultiPoly,
    Poly,
    SuperPoly,
)


@dataclass(frozen=True)
class Budget:
    """Caps on the solver's search; exceeding one raises BudgetExceeded."""

    max_degree: int = 40
    max_set_size: int = 200_000
    max_rounds: int = 64

    def __post_init__(self) -> None:
        if min(self.max_degree, self.max_set_size, self.max_rounds) < 1:
            raise ValueError("budget limits must be positive")


class BudgetExceeded(Exception):
    """A budget cap was hit; carries partial diagnostics."""

    def __init__(self, reason: str, detail: str, stats: dict | None = None):
        super().__init__(f"budget exceeded ({reason}): {detail}")
        self.reason = reason
        self.detail = detail
        self.stats = stats or {}


class NotIdempotentError(ValueError):
    pass


class DecompositionError(ValueError):
    pass


# --- derivations -----------------------------------------------------------


@dataclass(frozen=True)
class Derivation:
    pass


@dataclass(frozen=True)
class Ident(Derivation):
    """The identity element (empty composition)."""


@dataclass(frozen=True)
class Input(Derivation):
    index: int  # position in the SDL body sequence


@dataclass(frozen=True)
class Compose(Derivation):
    first: Derivation  # applied first
    second: Derivation


@dataclass(frozen=True)
class Generalize(Derivation):
    of: Derivation


def replay(d: Derivation, body: Sequence[MultiPoly], arity: int) -> MultiPoly:
    """Rebuild the element a derivation describes over the given body."""
    if isinstance(d, Ident):
        return MultiPoly.identity(arity)
    if isinstance(d, Input):
        return body[d.index]
    if isinstance(d, Compose):
        return replay(d.second, body, arity).after(replay(d.first, body, arity))
    if isinstance(d, Generalize):
        return generalize(replay(d.of, body, arity))
    raise TypeError(f"unknown derivation {d!r}")


# --- structural analysis of a single element -------------------------------


def sd_set(p: MultiPoly) -> frozenset[int]:
    """Indices i whose entry depends on x_i (SUPER entries never do)."""
    out = set()
    for i, e in enumerate(p.entries, start=1):
        if isinstance(e, SuperPoly):
            continue
        if any(m.exp(i) > 0 for m, _ in e.terms):
            out.add(i)
    return frozenset(out)


def is_idempotent(p: MultiPoly) -> bool:
    """Idempotence in the saturated domain: p o p == p."""
    return p.after(p) == p


@dataclass(frozen=True)
class Decomposition:
    """Split of a self-dependent entry p[i] = x_i + tau*p' + p'' + p'''.

    ``prime`` holds the self-dependent monomials that carry tau, with one
    tau factor stripped; ``dprime`` the tau-free self-dependent monomials
    other than x_i; ``tprime`` everything not self-dependent.  A monomial
    is self-dependent when all its variables are.
    """

    index: int
    prime: Poly
    dprime: Poly
    tprime: Poly

    def reassemble(self) -> Poly:
        return (
            Poly.var(self.index)
            + Poly.tau() * self.prime
            + self.dprime
            + self.tprime
        )


def decompose_entry(p: MultiPoly, i: int) -> Decomposition:
    if i not in sd_set(p):
        raise DecompositionError(f"variable {i} is not self-dependent")
    entry = p.entries[i - 1]
    assert isinstance(entry, Poly)
    bare = Monomial.var(i)
    if entry.coeff(bare) is not Coeff.ONE:
        raise DecompositionError(
            f"self-dependent entry missing bare x{i}"
        )
    sd = sd_set(p)
    prime: dict[Monomial, Coeff] = {}
    dprime: dict[Monomial, Coeff] = {}
    tprime: dict[Monomial, Coeff] = {}
    for m, c in entry.terms:
        if m == bare:
            continue
        if not m.variables <= sd:
            tprime[m] = c
        elif m.tau > 0:
            prime[Monomial(m.exps, m.tau - 1)] = c
        else:
            dprime[m] = c
    return Decomposition(i, Poly.of(prime), Poly.of(dprime), Poly.of(tprime))


def generalize(p: MultiPoly) -> MultiPoly:
    """Multiply accumulating increments by tau.

    For each self-dependent entry, the tau-free self-dependent residue
    p'' is lifted to tau*p'' (existing tau monomials keep their tau and
    non-self-dependent monomials are left alone, since their source
    values do not accumulate).  Only meaningful for idempotent elements;
    anything else is rejected.
    """
    if not is_idempotent(p):
        raise NotIdempotentError(f"not idempotent: {p}")
    tau = Poly.tau()
    entries = list(p.entries)
    for i in sd_set(p):
        d = decompose_entry(p, i)
        entries[i - 1] = (
            Poly.var(i) + tau * d.prime + tau * d.dprime + d.tprime
        )
    return MultiPoly(tuple(entries))


def detect_superpoly(p: MultiPoly) -> frozenset[int]:
    """Variables carrying a doubling monomial in this element.

    Flags i when entry i contains a monomial with a positive x_i
    exponent that is not exactly the coefficient-1, tau-free, degree-1
    x_i.  For any element the solver can actually realize by a trace
    family, such a monomial certifies super-polynomial growth of x_i.
    """
    out = set()
    for i, e in enumerate(p.entries, start=1):
        if isinstance(e, SuperPoly):
            continue
        for m, c in e.terms:
            if m.exp(i) > 0 and not (m.bare_var() == i and c is Coeff.ONE):
                out.add(i)
                break
    return frozenset(out)


# --- problems and solutions -------------------------------------------------


@dataclass(frozen=True)
class SdlProblem:
    """A loop body given as a sequence of tau-free transitions."""

    body: tuple[MultiPoly, ...]
    arity: int
    budget: Budget = Budget()

    def __post_init__(self) -> None:
        for m in self.body:
            if m.arity != self.arity:
                raise ValueError(f"body member has arity {m.arity}, expected {self.arity}")
            if not m.is_tau_free:
                raise ValueError(f"body member is not tau-free: {m}")


@dataclass
class SdlSolution:
    """Fixpoint of closure + generalization, with provenance.

    ``bounds`` preserves the deterministic discovery order; its first
    element is always the identity.  ``superpoly_vars`` lists every
    variable whose entry is SUPER in some bound (detector flags plus
    absorption through composition).
    """

    bounds: tuple[tuple[MultiPoly, Derivation], ...]
    superpoly_vars: frozenset[int]
    rounds_used: int
    elements_explored: int
    restarts: int
    generalizations_added: int

    @property
    def mps(self) -> tuple[MultiPoly, ...]:
        return tuple(m for m, _ in self.bounds)

    def as_dict(self) -> dict[MultiPoly, Derivation]:
        return dict(self.bounds)


class _FlagFound(Exception):
    def __init__(self, flags: frozenset[int]):
        self.flags = flags


class _Worklist:
    """Pairwise-composition closure with canonical dedup.

    ``processed`` elements are pairwise composed among themselves; the
    queue holds elements still to be combined.  First-found derivations
    are kept, and iteration order is deterministic.
    """

    def __init__(self, budget: Budget):
        self.budget = budget
        self.known: dict[MultiPoly, Derivation] = {}
        self.processed: list[MultiPoly] = []
        self.queue: list[MultiPoly] = []

    def add(self, mp: MultiPoly, deriv: Derivation) -> bool:
        if mp in self.known:
            return False
        if mp.max_degree > self.budget.max_degree:
            raise BudgetExceeded(
                "degree",
                f"element of degree {mp.max_degree} exceeds {self.budget.max_degree}",
            )
        if len(self.known) >= self.budget.max_set_size:
            raise BudgetExceeded(
                "set-size",
                f"more than {self.budget.max_set_size} elements",
            )
        self.known[mp] = deriv
        self.queue.append(mp)
        return True

    def close(self, on_new=None) -> None:
        while self.queue:
            e = self.queue.pop(0)
            e_deriv = self.known[e]
            partners = self.processed + [e]
            for f in partners:
                f_deriv = self.known[f]
                for mp, deriv in (
                    (e.after(f), Compose(f_deriv, e_deriv)),
                    (f.after(e), Compose(e_deriv, f_deriv)),
                ):
                    if self.add(mp, deriv) and on_new is not None:
                        on_new(mp)
            self.processed.append(e)


def closure(
    transitions: Iterable[MultiPoly], arity: int, budget: Budget = Budget()
) -> dict[MultiPoly, Derivation]:
    """Least composition-closed set containing Id and the transitions.

    Returns an insertion-ordered mapping from element to its first-found
    derivation.
    """
    wl = _Worklist(budget)
    wl.add(MultiPoly.identity(arity), Ident())
    for k, m in enumerate(transitions):
        wl.add(m, Input(k))
    wl.close()
    return wl.known


def solve_sdl(problem: SdlProblem) -> SdlSolution:
    """Run closure + generalization to fixpoint, restarting on flags."""
    budget = problem.budget
    flags: set[int] = set()
    restarts = 0
    total_rounds = 0
    total_elements = 0
    while True:
        body = [_mask(m, flags) for m in problem.body]
        new_flags: set[int] = set()

        def note(mp: MultiPoly) -> None:
            found = detect_superpoly(mp) - flags
            if found:
                raise _FlagFound(frozenset(found))

        wl = _Worklist(budget)
        generalized: set[MultiPoly] = set()
        gen_added = 0
        try:
            wl.add(MultiPoly.identity(problem.arity), Ident())
            for k, m in enumerate(body):
                if wl.add(m, Input(k)):
                    note(m)
            rounds = 0
            while True:
                rounds += 1
                total_rounds += 1
                if rounds > budget.max_rounds:
                    raise BudgetExceeded(
                        "rounds",
                        f"no fixpoint after {budget.max_rounds} rounds",
                        {"elements": len(wl.known)},
                    )
                wl.close(note)
                added = False
                for mp in list(wl.known):
                    if mp in generalized:
                        continue
                    if not is_idempotent(mp):
                        continue
                    generalized.add(mp)
                    g = generalize(mp)
                    if wl.add(g, Generalize(wl.known[mp])):
                        note(g)
                        gen_added += 1
                        added = True
                if not added:
                    break
            total_elements += len(wl.known)
            supers: set[int] = set(flags)
            for mp in wl.known:
                supers |= mp.super_entries
            return SdlSolution(
                bounds=tuple(wl.known.items()),
                superpoly_vars=frozenset(supers),
                rounds_used=total_rounds,
                elements_explored=total_elements,
                restarts=restarts,
                generalizations_added=gen_added,
            )
        except _FlagFound as f:
            flags |= f.flags
            restarts += 1
            total_elements += len(wl.known)
            continue


def _mask(mp: MultiPoly, flags: set[int]) -> MultiPoly:
    if not flags:
        return mp
    entries = list(mp.entries)
    for i in flags:
        entries[i - 1] = SUPER
    return MultiPoly(tuple(entries))
