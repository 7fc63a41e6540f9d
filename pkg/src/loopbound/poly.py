"""Polynomial algebra for state-transition bounds.

Two coefficient domains share one monomial representation:

* ``NatPoly`` / ``NatMultiPoly`` carry exact non-negative integer
  coefficients and describe transitions precisely (symbolic evaluation
  of straight-line code, oracle replay).
* ``Poly`` / ``MultiPoly`` carry saturated coefficients ``{1, w}`` where
  ``w`` ("many") stands for any concrete coefficient >= 2 and absence of
  a monomial stands for 0.  The loop solver computes in this domain: it
  is finite for any bounded monomial support yet still distinguishes a
  value that is merely carried along (coefficient 1 on its own variable)
  from one that is multiplied up every iteration (coefficient >= 2),
  which is exactly the distinction that separates polynomial from
  exponential growth under iteration.

Monomials range over variables ``x1..xn`` plus the distinguished
iteration counter ``tau``.  A ``MultiPoly`` is one entry per variable;
an entry is either a ``Poly`` or the absorbing ``SUPER`` marker used for
variables that admit no polynomial bound.

All values are immutable and hashable; all operations are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence, Union


class Coeff(Enum):
    """Saturated coefficient: 1, or w (written omega) for anything >= 2."""

    ONE = "1"
    MANY = "w"

    def __repr__(self) -> str:
        return f"Coeff.{self.name}"


def _cadd(a: Coeff, b: Coeff) -> Coeff:
    # Both operands are present (non-zero), so the concrete sum is >= 2.
    return Coeff.MANY


def _cmul(a: Coeff, b: Coeff) -> Coeff:
    return Coeff.ONE if a is Coeff.ONE and b is Coeff.ONE else Coeff.MANY


@dataclass(frozen=True)
class Monomial:
    """A product of variable powers and a tau power.

    ``exps`` maps 1-based variable indices to positive exponents, stored
    as a sorted tuple of pairs so the value is hashable and canonical.
    The empty monomial (no variables, tau 0) is the unit; it only arises
    transiently during substitution since the language has no constants.
    """

    exps: tuple[tuple[int, int], ...] = ()
    tau: int = 0

    @staticmethod
    def of(exps: Mapping[int, int], tau: int = 0) -> Monomial:
        items = tuple(sorted((i, e) for i, e in exps.items() if e != 0))
        for i, e in items:
            if i < 1:
                raise ValueError(f"variable index must be >= 1, got {i}")
            if e < 0:
                raise ValueError(f"negative exponent for x{i}")
        if tau < 0:
            raise ValueError("negative tau exponent")
        return Monomial(items, tau)

    @staticmethod
    def var(i: int) -> Monomial:
        if i < 1:
            raise ValueError(f"variable index must be >= 1, got {i}")
        return Monomial(((i, 1),), 0)

    @staticmethod
    def tau_power(k: int = 1) -> Monomial:
        return Monomial((), k)

    def exp(self, i: int) -> int:
        for j, e in self.exps:
            if j == i:
                return e
        return 0

    @property
    def degree(self) -> int:
        """Total degree, counting tau."""
        return sum(e for _, e in self.exps) + self.tau

    @property
    def variables(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.exps)

    def mul(self, other: Monomial) -> Monomial:
        merged = dict(self.exps)
        for i, e in other.exps:
            merged[i] = merged.get(i, 0) + e
        return Monomial(tuple(sorted(merged.items())), self.tau + other.tau)

    def dominates(self, other: Monomial) -> bool:
        """True iff ``other <= self`` exponent-wise (tau included).

        Equivalent to ``other(v) <= self(v)`` for every assignment with
        all variables and tau >= 1.
        """
        if other.tau > self.tau:
            return False
        mine = dict(self.exps)
        return all(e <= mine.get(i, 0) for i, e in other.exps)

    def bare_var(self) -> int | None:
        """Index i if the monomial is exactly x_i (degree 1, tau-free)."""
        if self.tau == 0 and len(self.exps) == 1 and self.exps[0][1] == 1:
            return self.exps[0][0]
        return None

    def eval_at(self, state: Sequence[int], t: int = 0) -> int:
        v = 1
        for i, e in self.exps:
            v *= state[i - 1] ** e
        if self.tau:
            v *= t ** self.tau
        return v

    def sort_key(self) -> tuple:
        # Graded order, then by exponent tuple with tau last: deterministic.
        return (self.degree, self.exps, self.tau)

    def __str__(self) -> str:
        parts = [f"x{i}" if e == 1 else f"x{i}^{e}" for i, e in self.exps]
        if self.tau == 1:
            parts.append("tau")
        elif self.tau > 1:
            parts.append(f"tau^{self.tau}")
        return "*".join(parts) if parts else "1"


def mono_dominates(m1: Monomial, m2: Monomial) -> bool:
    """True iff m1 dominates m2 (pointwise exponent comparison)."""
    return m1.dominates(m2)


@dataclass(frozen=True)
class SuperPoly:
    """Absorbing entry marker for variables with no polynomial bound."""

    def __str__(self) -> str:
        return "SUPERPOLY"


SUPER = SuperPoly()


class SuperPolyValueError(ValueError):
    """Raised when a SUPERPOLY entry is used where a polynomial is required."""


@dataclass(frozen=True)
class Poly:
    """Formal sum of distinct monomials with saturated coefficients.

    Build through :meth:`of`, :meth:`var` or the arithmetic operators so
    the term tuple stays canonically sorted and zero-free.
    """

    terms: tuple[tuple[Monomial, Coeff], ...] = ()

    @staticmethod
    def of(terms: Mapping[Monomial, Coeff]) -> Poly:
        return Poly(tuple(sorted(terms.items(), key=lambda mc: mc[0].sort_key())))

    @staticmethod
    def zero() -> Poly:
        return Poly(())

    @staticmethod
    def var(i: int) -> Poly:
        return Poly(((Monomial.var(i), Coeff.ONE),))

    @staticmethod
    def tau() -> Poly:
        return Poly(((Monomial.tau_power(1), Coeff.ONE),))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, m: Monomial) -> Coeff | None:
        for mono, c in self.terms:
            if mono == m:
                return c
        return None

    def __add__(self, other: Poly) -> Poly:
        acc = dict(self.terms)
        for m, c in other.terms:
            prev = acc.get(m)
            acc[m] = c if prev is None else _cadd(prev, c)
        return Poly.of(acc)

    def __mul__(self, other: Poly) -> Poly:
        acc: dict[Monomial, Coeff] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = m1.mul(m2)
                c = _cmul(c1, c2)
                prev = acc.get(m)
                acc[m] = c if prev is None else _cadd(prev, c)
        return Poly.of(acc)

    def scale(self, c: Coeff) -> Poly:
        if c is Coeff.ONE:
            return self
        return Poly(tuple((m, Coeff.MANY) for m, _ in self.terms))

    @property
    def mentions(self) -> frozenset[int]:
        out: set[int] = set()
        for m, _ in self.terms:
            out.update(m.variables)
        return frozenset(out)

    @property
    def is_tau_free(self) -> bool:
        return all(m.tau == 0 for m, _ in self.terms)

    @property
    def max_degree(self) -> int:
        return max((m.degree for m, _ in self.terms), default=0)

    def substitute(self, entries: Sequence[Poly | SuperPoly]) -> Poly:
        """Replace each x_i by ``entries[i-1]``; tau passes through.

        Only entries for variables actually mentioned are touched, and
        those must be polynomials (callers deal with SUPER absorption).
        """
        out = Poly.zero()
        cache: dict[tuple[int, int], Poly] = {}
        for m, c in self.terms:
            term = Poly(((Monomial((), m.tau), c),))
            for i, e in m.exps:
                key = (i, e)
                power = cache.get(key)
                if power is None:
                    entry = entries[i - 1]
                    if isinstance(entry, SuperPoly):
                        raise SuperPolyValueError(f"entry {i} is SUPERPOLY")
                    power = entry
                    for _ in range(e - 1):
                        power = power * entry
                    cache[key] = power
                term = term * power
            out = out + term
        return out

    def subst_tau(self, e: Poly) -> Poly:
        """Replace tau^k by e^k, multiplied into each monomial."""
        if not e.is_tau_free:
            raise ValueError("tau substitution expression must be tau-free")
        out = Poly.zero()
        powers: dict[int, Poly] = {}
        for m, c in self.terms:
            if m.tau == 0:
                out = out + Poly(((m, c),))
                continue
            power = powers.get(m.tau)
            if power is None:
                power = e
                for _ in range(m.tau - 1):
                    power = power * e
                powers[m.tau] = power
            out = out + (Poly(((Monomial(m.exps, 0), c),)) * power)
        return out

    def split_linear(self) -> tuple[Poly, Poly]:
        """Split into (bare-variable monomials, everything else)."""
        lin: dict[Monomial, Coeff] = {}
        rest: dict[Monomial, Coeff] = {}
        for m, c in self.terms:
            (lin if m.bare_var() is not None else rest)[m] = c
        return Poly.of(lin), Poly.of(rest)

    def reduce(self) -> Poly:
        """Delete monomials strictly dominated by another monomial.

        Coefficient-blind, hence only valid up to constant factors for
        arguments >= 1; applied at reporting time, never in the solver.
        """
        monos = [m for m, _ in self.terms]
        kept = {
            m: c
            for m, c in self.terms
            if not any(other != m and other.dominates(m) for other in monos)
        }
        return Poly.of(kept)

    def erase(self) -> Poly:
        """Forget coefficients: every term becomes coefficient 1."""
        return Poly(tuple((m, Coeff.ONE) for m, _ in self.terms))

    def eval_gamma(self, state: Sequence[int], t: int = 0) -> int:
        """Value of the canonical concretization (all coefficients 1)."""
        return sum(m.eval_at(state, t) for m, _ in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms:
            s = str(m)
            parts.append(s if c is Coeff.ONE else f"w*{s}")
        return "+".join(parts)


def poly_dominates(p: Poly, q: Poly) -> bool:
    """True iff every monomial of q is dominated by some monomial of p."""
    p_monos = [m for m, _ in p.terms]
    return all(any(mp.dominates(mq) for mp in p_monos) for mq, _ in q.terms)


def reduce_poly(p: Poly) -> Poly:
    return p.reduce()


def split_linear(p: Poly) -> tuple[Poly, Poly]:
    return p.split_linear()


Entry = Union[Poly, SuperPoly]


@dataclass(frozen=True)
class MultiPoly:
    """An n-tuple of entries bounding the final value of each variable."""

    entries: tuple[Entry, ...]

    @staticmethod
    def identity(n: int) -> MultiPoly:
        return MultiPoly(tuple(Poly.var(i) for i in range(1, n + 1)))

    @staticmethod
    def of(entries: Iterable[Entry]) -> MultiPoly:
        return MultiPoly(tuple(entries))

    @property
    def arity(self) -> int:
        return len(self.entries)

    @property
    def is_identity(self) -> bool:
        return self == MultiPoly.identity(self.arity)

    @property
    def is_tau_free(self) -> bool:
        return all(
            isinstance(e, SuperPoly) or e.is_tau_free for e in self.entries
        )

    @property
    def max_degree(self) -> int:
        return max(
            (e.max_degree for e in self.entries if isinstance(e, Poly)),
            default=0,
        )

    @property
    def super_entries(self) -> frozenset[int]:
        return frozenset(
            i + 1 for i, e in enumerate(self.entries) if isinstance(e, SuperPoly)
        )

    def after(self, other: MultiPoly) -> MultiPoly:
        """Composition ``self o other``: apply ``other`` first.

        Each x_i in self's entries is replaced by other's entry i; tau
        exponents pass through untouched.  An entry becomes SUPER when it
        is SUPER already or mentions a variable whose entry in ``other``
        is SUPER.
        """
        if self.arity != other.arity:
            raise ValueError(
                f"arity mismatch: {self.arity} vs {other.arity}"
            )
        out: list[Entry] = []
        for e in self.entries:
            if isinstance(e, SuperPoly):
                out.append(SUPER)
                continue
            if any(
                isinstance(other.entries[j - 1], SuperPoly) for j in e.mentions
            ):
                out.append(SUPER)
                continue
            out.append(e.substitute(other.entries))
        return MultiPoly(tuple(out))

    def subst_tau(self, e: Poly) -> MultiPoly:
        return MultiPoly(
            tuple(
                ent if isinstance(ent, SuperPoly) else ent.subst_tau(e)
                for ent in self.entries
            )
        )

    def erase(self) -> MultiPoly:
        return MultiPoly(
            tuple(
                ent if isinstance(ent, SuperPoly) else ent.erase()
                for ent in self.entries
            )
        )

    def reduce_entries(self) -> MultiPoly:
        return MultiPoly(
            tuple(
                ent if isinstance(ent, SuperPoly) else ent.reduce()
                for ent in self.entries
            )
        )

    def eval_gamma(self, state: Sequence[int], t: int = 0) -> tuple[int, ...]:
        out = []
        for i, e in enumerate(self.entries, start=1):
            if isinstance(e, SuperPoly):
                raise SuperPolyValueError(f"entry {i} is SUPERPOLY")
            out.append(e.eval_gamma(state, t))
        return tuple(out)

    def __str__(self) -> str:
        return "<" + ", ".join(str(e) for e in self.entries) + ">"


def mp_compose(q: MultiPoly, p: MultiPoly) -> MultiPoly:
    """``q o p``: substitute p's entries into q (p acts first)."""
    return q.after(p)


def mp_dominates(a: MultiPoly, b: MultiPoly) -> bool:
    """Entry-wise domination; a SUPER entry dominates anything."""
    for ea, eb in zip(a.entries, b.entries):
        if isinstance(ea, SuperPoly):
            continue
        if isinstance(eb, SuperPoly):
            return False
        if not poly_dominates(ea, eb):
            return False
    return True


def reduce_mp_set(mps: Iterable[MultiPoly]) -> tuple[MultiPoly, ...]:
    """Entry-reduce each member, then delete dominated members.

    The identity transition is always retained, so the t=0 behaviour of a
    loop stays visible even when another bound dominates it entry-wise.
    Result is in canonical (string) order.
    """
    reduced: list[MultiPoly] = []
    seen: set[MultiPoly] = set()
    for mp in mps:
        r = mp.reduce_entries()
        if r not in seen:
            seen.add(r)
            reduced.append(r)
    kept = [
        m
        for m in reduced
        if m.is_identity
        or not any(other != m and mp_dominates(other, m) for other in reduced)
    ]
    return tuple(sorted(kept, key=str))


@dataclass(frozen=True)
class NatPoly:
    """Polynomial with exact positive integer coefficients."""

    terms: tuple[tuple[Monomial, int], ...] = ()

    @staticmethod
    def of(terms: Mapping[Monomial, int]) -> NatPoly:
        items = {m: c for m, c in terms.items() if c != 0}
        for m, c in items.items():
            if c < 0:
                raise ValueError(f"negative coefficient for {m}")
        return NatPoly(tuple(sorted(items.items(), key=lambda mc: mc[0].sort_key())))

    @staticmethod
    def zero() -> NatPoly:
        return NatPoly(())

    @staticmethod
    def var(i: int) -> NatPoly:
        return NatPoly(((Monomial.var(i), 1),))

    def __add__(self, other: NatPoly) -> NatPoly:
        acc = dict(self.terms)
        for m, c in other.terms:
            acc[m] = acc.get(m, 0) + c
        return NatPoly.of(acc)

    def __mul__(self, other: NatPoly) -> NatPoly:
        acc: dict[Monomial, int] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = m1.mul(m2)
                acc[m] = acc.get(m, 0) + c1 * c2
        return NatPoly.of(acc)

    def substitute(self, entries: Sequence[NatPoly]) -> NatPoly:
        out = NatPoly.zero()
        cache: dict[tuple[int, int], NatPoly] = {}
        for m, c in self.terms:
            term = NatPoly(((Monomial((), m.tau), c),))
            for i, e in m.exps:
                key = (i, e)
                power = cache.get(key)
                if power is None:
                    power = entries[i - 1]
                    for _ in range(e - 1):
                        power = power * entries[i - 1]
                    cache[key] = power
                term = term * power
            out = out + term
        return out

    def eval(self, state: Sequence[int], t: int = 0) -> int:
        return sum(c * m.eval_at(state, t) for m, c in self.terms)

    def alpha(self) -> Poly:
        """Abstract to the saturated domain: 1 stays 1, >= 2 becomes w."""
        return Poly.of(
            {m: (Coeff.ONE if c == 1 else Coeff.MANY) for m, c in self.terms}
        )

    def join(self, other: NatPoly) -> NatPoly:
        """Monomial-wise maximum of coefficients."""
        acc = dict(self.terms)
        for m, c in other.terms:
            acc[m] = max(acc.get(m, 0), c)
        return NatPoly.of(acc)

    @property
    def is_tau_free(self) -> bool:
        return all(m.tau == 0 for m, _ in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms:
            parts.append(str(m) if c == 1 else f"{c}*{m}")
        return "+".join(parts)


def join_nat(p: NatPoly, q: NatPoly) -> NatPoly:
    return p.join(q)


@dataclass(frozen=True)
class NatMultiPoly:
    """An n-tuple of exact-coefficient polynomials."""

    entries: tuple[NatPoly, ...]

    @staticmethod
    def identity(n: int) -> NatMultiPoly:
        return NatMultiPoly(tuple(NatPoly.var(i) for i in range(1, n + 1)))

    @property
    def arity(self) -> int:
        return len(self.entries)

    def with_entry(self, i: int, p: NatPoly) -> NatMultiPoly:
        entries = list(self.entries)
        entries[i - 1] = p
        return NatMultiPoly(tuple(entries))

    def after(self, other: NatMultiPoly) -> NatMultiPoly:
        if self.arity != other.arity:
            raise ValueError(
                f"arity mismatch: {self.arity} vs {other.arity}"
            )
        return NatMultiPoly(
            tuple(e.substitute(other.entries) for e in self.entries)
        )

    def eval(self, state: Sequence[int], t: int = 0) -> tuple[int, ...]:
        return tuple(e.eval(state, t) for e in self.entries)

    def alpha(self) -> MultiPoly:
        return MultiPoly(tuple(e.alpha() for e in self.entries))

    def __str__(self) -> str:
        return "<" + ", ".join(str(e) for e in self.entries) + ">"


def alpha_k(p: NatMultiPoly) -> MultiPoly:
    return p.alpha()


def erase_k(p: MultiPoly) -> MultiPoly:
    return p.erase()


def gamma_eval(p: MultiPoly, state: Sequence[int], t: int = 0) -> tuple[int, ...]:
    return p.eval_gamma(state, t)


def subst_tau(p: MultiPoly, e: Poly) -> MultiPoly:
    return p.subst_tau(e)


# ---------------------------------------------------------------------------
# Text format: "x1^2*x3*tau+w*x2"; MultiPoly as "<e1, e2, ...>" with
# SUPERPOLY for marked entries.  JSON mirrors the same structure with
# entries as arrays of {"coeff": "1"|"w", "exps": {"x1": 2, "tau": 1}}.
# ---------------------------------------------------------------------------


class PolyParseError(ValueError):
    pass


def _parse_factor(text: str) -> tuple[str, int, int]:
    """Return ("var"|"tau"|"w", index, exponent) for one *-factor."""
    base, _, exp_s = text.partition("^")
    base = base.strip()
    exp = 1
    if exp_s:
        try:
            exp = int(exp_s)
        except ValueError:
            raise PolyParseError(f"bad exponent in {text!r}") from None
        if exp < 1:
            raise PolyParseError(f"exponent must be positive in {text!r}")
    if base == "w":
        if exp != 1:
            raise PolyParseError("w cannot carry an exponent")
        return ("w", 0, 1)
    if base == "tau":
        return ("tau", 0, exp)
    if base.startswith("x") and base[1:].isdigit():
        idx = int(base[1:])
        if idx < 1:
            raise PolyParseError(f"bad variable in {text!r}")
        return ("var", idx, exp)
    raise PolyParseError(f"unrecognized factor {text!r}")


def parse_poly(text: str) -> Poly:
    """Parse the compact textual polynomial format."""
    text = text.strip()
    if text == "0":
        return Poly.zero()
    acc: dict[Monomial, Coeff] = {}
    for term in text.split("+"):
        term = term.strip()
        if not term:
            raise PolyParseError(f"empty term in {text!r}")
        exps: dict[int, int] = {}
        tau = 0
        coeff = Coeff.ONE
        for factor in term.split("*"):
            kind, idx, exp = _parse_factor(factor)
            if kind == "w":
                coeff = Coeff.MANY
            elif kind == "tau":
                tau += exp
            else:
                exps[idx] = exps.get(idx, 0) + exp
        m = Monomial.of(exps, tau)
        prev = acc.get(m)
        acc[m] = coeff if prev is None else _cadd(prev, coeff)
    return Poly.of(acc)


def parse_mp(text: str) -> MultiPoly:
    """Parse "<e1, e2, ...>" where each entry is a poly or SUPERPOLY."""
    text = text.strip()
    if not (text.startswith("<") and text.endswith(">")):
        raise PolyParseError(f"multi-polynomial must be <...>: {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        raise PolyParseError("empty multi-polynomial")
    entries: list[Entry] = []
    for part in inner.split(","):
        part = part.strip()
        entries.append(SUPER if part == "SUPERPOLY" else parse_poly(part))
    return MultiPoly(tuple(entries))


def _mono_to_obj(m: Monomial) -> dict:
    exps = {f"x{i}": e for i, e in m.exps}
    if m.tau:
        exps["tau"] = m.tau
    return exps


def mp_to_obj(mp: MultiPoly) -> list:
    """JSON-ready structure for a MultiPoly."""
    out: list = []
    for e in mp.entries:
        if isinstance(e, SuperPoly):
            out.append("SUPERPOLY")
        else:
            out.append(
                [
                    {"coeff": c.value, "exps": _mono_to_obj(m)}
                    for m, c in e.terms
                ]
            )
    return out


def _mono_from_obj(obj: Mapping[str, int]) -> Monomial:
    exps: dict[int, int] = {}
    tau = 0
    for key, e in obj.items():
        if key == "tau":
            tau = int(e)
        elif key.startswith("x") and key[1:].isdigit():
            exps[int(key[1:])] = int(e)
        else:
            raise PolyParseError(f"bad exponent key {key!r}")
    return Monomial.of(exps, tau)


def mp_from_obj(obj: Sequence) -> MultiPoly:
    """Inverse of :func:`mp_to_obj`.

    Integer coefficients are accepted and saturated (1 -> 1, >= 2 -> w).
    """
    entries: list[Entry] = []
    for entry in obj:
        if entry == "SUPERPOLY":
            entries.append(SUPER)
            continue
        acc: dict[Monomial, Coeff] = {}
        for term in entry:
            raw = term.get("coeff", "1")
            if isinstance(raw, int):
                if raw < 1:
                    raise PolyParseError(f"bad coefficient {raw}")
                c = Coeff.ONE if raw == 1 else Coeff.MANY
            else:
                try:
                    c = Coeff(raw)
                except ValueError:
                    raise PolyParseError(f"bad coefficient {raw!r}") from None
            m = _mono_from_obj(term.get("exps", {}))
            prev = acc.get(m)
            acc[m] = c if prev is None else _cadd(prev, c)
        entries.append(Poly.of(acc))
    return MultiPoly(tuple(entries))
