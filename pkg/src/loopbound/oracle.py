"""Brute-force ground truth for validating the analyzer.

Everything here works by exhaustive execution at desk scale:

* ``check_upper`` enumerates every reachable final state over an input
  grid and verifies that some computed bound covers it within a small
  integer constant factor,
* ``check_lower`` replays a witness pattern and verifies the bound is
  reached from below, fitting the tightness constant and watching it
  across input scales,
* ``classify_growth`` measures worst-case values at doubling input
  scales and classifies a variable's growth from the log-log slope, and
* ``gen_adversarial`` emits the family of choice-heavy programs whose
  analysis necessarily produces exponentially many incomparable bounds.

Random program / transition generators live here too; they feed the
property-test batteries.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from . import lang
from .analyzer import AnalysisReport
from .lang import Program, State, enumerate_finals
from .poly import (
    Monomial,
    MultiPoly,
    NatMultiPoly,
    NatPoly,
    SuperPoly,
)
from .sdl import BudgetExceeded
from .witness import Pattern, expand_pattern


# --- grids -------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Per-variable value lists, enumerated as a cartesian product."""

    values: tuple[tuple[int, ...], ...]
    cap: int = 100_000

    @staticmethod
    def uniform(n: int, values: Sequence[int], cap: int = 100_000) -> Grid:
        return Grid(tuple(tuple(values) for _ in range(n)), cap)

    def points(self) -> list[State]:
        total = 1
        for vals in self.values:
            total *= len(vals)
        if total > self.cap:
            raise BudgetExceeded("grid", f"{total} grid points exceed cap {self.cap}")
        return [tuple(p) for p in itertools.product(*self.values)]


# --- check reports -----------------------------------------------------------


@dataclass
class CheckReport:
    """Outcome of an upper or lower bound check.

    A counterexample is present exactly when the verdict is fail.
    """

    kind: str  # "upper" | "lower"
    passed: bool
    fitted_upper: dict[str, int] = field(default_factory=dict)
    fitted_lower: dict[int, float] = field(default_factory=dict)
    counterexamples: list[dict] = field(default_factory=list)


# --- trace enumeration over SDL bodies ---------------------------------------


def sdl_max_outcomes(
    body: Sequence[NatMultiPoly],
    state: Sequence[int],
    max_length: int,
    budget: int = 1_000_000,
) -> tuple[int, ...]:
    """Componentwise max over all trace outcomes of length <= max_length."""
    if max_length < 0:
        raise ValueError("max_length must be >= 0")
    s = tuple(state)
    best = list(s)
    level = {s}
    explored = 1
    for _ in range(max_length):
        nxt: set[State] = set()
        for u in level:
            for m in body:
                v = m.eval(u)
                nxt.add(v)
                for i, x in enumerate(v):
                    if x > best[i]:
                        best[i] = x
        explored += len(nxt)
        if explored > budget:
            raise BudgetExceeded("states", f"more than {budget} trace states")
        if nxt <= level:
            break
        level = nxt
    return tuple(best)


def replay_trace(
    body: Sequence[NatMultiPoly], trace: Sequence[int], state: Sequence[int]
) -> State:
    s = tuple(state)
    for k in trace:
        s = body[k].eval(s)
    return s


def gamma_body(body: Sequence[MultiPoly]) -> tuple[NatMultiPoly, ...]:
    """Concretize saturated transitions with all coefficients 1."""
    out = []
    for mp in body:
        entries = []
        for e in mp.entries:
            if isinstance(e, SuperPoly):
                raise ValueError("cannot concretize a SUPERPOLY entry")
            entries.append(NatPoly.of({m: 1 for m, _ in e.terms}))
        out.append(NatMultiPoly(tuple(entries)))
    return tuple(out)


# --- upper bounds -------------------------------------------------------------


def check_upper(
    program: Program,
    report: AnalysisReport,
    grid: Grid,
    cap: int = 64,
    enum_budget: int = 200_000,
    max_counterexamples: int = 3,
) -> CheckReport:
    """Empirically verify the bounding clause over a grid.

    For every input x and every reachable final y, some computed bound b
    must satisfy y_i <= c * gamma(b)[i](x) for all polynomially bounded
    i, with one integer c <= cap for the whole tuple.  The full
    (unreduced) bound set is checked: dominance pruning is only valid
    for inputs >= 1, while grids deliberately include zeros.
    """
    pb = sorted(report.pb)
    bounds = report.mps_full
    fitted: dict[str, int] = {}
    out = CheckReport(kind="upper", passed=True)
    for x in grid.points():
        finals = enumerate_finals(program, x, enum_budget)
        if finals.truncated:
            raise BudgetExceeded(
                "states", f"enumeration exceeded {enum_budget} states at {x}"
            )
        values = {str(b): [b.entries[i - 1] for i in pb] for b in bounds}
        evaluated = {
            key: [e.eval_gamma(x) if not isinstance(e, SuperPoly) else None for e in entries]
            for key, entries in values.items()
        }
        for y in finals:
            best_key = None
            best_c = None
            for key, vals in evaluated.items():
                c = 1
                ok = True
                for idx, i in enumerate(pb):
                    bound_v = vals[idx]
                    yi = y[i - 1]
                    if yi == 0:
                        continue
                    if bound_v is None or bound_v == 0:
                        ok = False
                        break
                    c = max(c, -(-yi // bound_v))  # ceil division
                if ok and (best_c is None or c < best_c):
                    best_c, best_key = c, key
            if best_c is None or best_c > cap:
                out.passed = False
                out.counterexamples.append(
                    {
                        "input": list(x),
                        "final": list(y),
                        "needed_c": best_c,
                        "cap": cap,
                    }
                )
                if len(out.counterexamples) >= max_counterexamples:
                    out.fitted_upper = fitted
                    return out
            else:
                fitted[best_key] = max(fitted.get(best_key, 0), best_c)
    out.fitted_upper = fitted
    return out


# --- lower bounds -------------------------------------------------------------


def check_lower(
    body: Sequence[NatMultiPoly],
    bound: MultiPoly,
    pattern: Pattern,
    scales: Sequence[int] = (2, 4, 8),
    t_range: Sequence[int] = (1, 2, 3, 4, 5, 6),
    decay_limit: float = 0.5,
) -> CheckReport:
    """Verify that the pattern realizes the bound from below.

    At each scale s the trace ``pattern(t)`` is replayed from the state
    (s, ..., s); the final y must cover the bound's bare-variable
    monomials with no slack and its remaining monomials up to a fitted
    constant d: y_i >= lin_i(x) + d * rest_i(x, t).  d is fitted at the
    smallest scale and must not decay below ``decay_limit`` times that
    value at the larger scales.
    """
    out = CheckReport(kind="lower", passed=True)
    n = bound.arity
    erased = bound.erase()
    split = []
    for e in erased.entries:
        if isinstance(e, SuperPoly):
            raise ValueError("lower check needs a SUPER-free bound")
        split.append(e.split_linear())
    fitted: dict[int, float] = {}
    for s in scales:
        x = tuple([s] * n)
        d_scale: float | None = None
        for t in t_range:
            trace = expand_pattern(pattern, t) if pattern.atoms else ()
            y = replay_trace(body, trace, x)
            for i in range(n):
                lin, rest = split[i]
                lin_v = lin.eval_gamma(x, t)
                rest_v = rest.eval_gamma(x, t)
                slack = y[i] - lin_v
                if slack < 0:
                    out.passed = False
                    out.counterexamples.append(
                        {
                            "scale": s,
                            "t": t,
                            "variable": i + 1,
                            "observed": y[i],
                            "linear_part": lin_v,
                        }
                    )
                    out.fitted_lower = fitted
                    return out
                if rest_v > 0:
                    ratio = slack / rest_v
                    if d_scale is None or ratio < d_scale:
                        d_scale = ratio
        fitted[s] = 1.0 if d_scale is None else d_scale
    out.fitted_lower = fitted
    base = fitted[scales[0]]
    if base <= 0:
        out.passed = False
        out.counterexamples.append(
            {"scale": scales[0], "fitted_d": base, "reason": "no positive slack"}
        )
        return out
    for s in scales[1:]:
        if fitted[s] < decay_limit * base:
            out.passed = False
            out.counterexamples.append(
                {
                    "scale": s,
                    "fitted_d": fitted[s],
                    "base_d": base,
                    "reason": "tightness constant decayed",
                }
            )
    return out


# --- growth classification ----------------------------------------------------


@dataclass(frozen=True)
class Growth:
    kind: str  # "polynomial" | "superpolynomial"
    degree: int | None = None

    @property
    def is_polynomial(self) -> bool:
        return self.kind == "polynomial"


def _bit_log2(v: int) -> float:
    # Accurate enough log2 for huge ints: bit_length plus a mantissa peek.
    if v <= 0:
        return 0.0
    bits = v.bit_length()
    if bits <= 52:
        return math.log2(v)
    top = v >> (bits - 52)
    return (bits - 52) + math.log2(top)


def classify_growth(
    program: Program,
    i: int,
    scales: Sequence[int] = (2, 4, 8, 16, 32, 64, 128, 256),
    enum_budget: int = 2_000_000,
    value_bit_limit: int = 1 << 21,
) -> Growth:
    """Classify a variable's worst-case growth from measured slopes.

    Evaluates the worst-case final value of variable i at inputs
    (s, ..., s) for doubling scales, and watches the log-log slope:
    stabilizing slopes mean polynomial growth of about that degree,
    slopes that keep increasing mean super-polynomial growth.  Scales
    stop as soon as the verdict is clear, so exponential programs are
    classified before their values get astronomically large.
    """
    logs: list[float] = []
    slopes: list[float] = []
    used = 0
    for s in scales:
        x = tuple([s] * program.n)
        try:
            finals = enumerate_finals(program, x, enum_budget)
        except MemoryError:  # pragma: no cover - defensive
            break
        if finals.truncated:
            break
        worst = max(y[i - 1] for y in finals)
        if worst.bit_length() > value_bit_limit:
            break
        logs.append(_bit_log2(max(worst, 1)))
        used += 1
        if used >= 2:
            slopes.append(logs[-1] - logs[-2])
        if len(slopes) >= 3:
            d1 = slopes[-2] - slopes[-3]
            d2 = slopes[-1] - slopes[-2]
            if d2 > 0.5 and d1 > 0.25 and slopes[-1] > slopes[-2] > slopes[-3]:
                return Growth("superpolynomial")
            if abs(d1) < 0.3 and abs(d2) < 0.3 and d2 <= d1 + 0.05:
                return Growth("polynomial", degree=round(slopes[-1]))
    # Out of scales (or budget): judge from whatever slopes accumulated.
    if len(slopes) >= 2:
        if slopes[-1] - slopes[0] > 0.75 and slopes[-1] > slopes[-2]:
            return Growth("superpolynomial")
        return Growth("polynomial", degree=round(slopes[-1]))
    raise BudgetExceeded(
        "states", f"could not evaluate enough scales for variable {i}"
    )


# --- adversarial corpus --------------------------------------------------------


def gen_adversarial(n: int, d: int) -> Program:
    """Blocked nondeterministic product family over n variables.

    Uses m = n/2 source variables and m targets.  Each target is
    assigned a product of d independent block choices (blocks of size
    m/d over the sources), so the analysis needs (m/d)^(m*d) pairwise
    incomparable bounds to describe all outcomes.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    m = n // 2
    if d < 1 or m % d:
        raise ValueError("d must be positive and divide n/2")
    block = m // d
    commands: list[lang.Command] = []
    for j in range(1, m + 1):
        target = m + j
        for b in range(d):
            lo = b * block + 1
            options: list[lang.Command] = []
            for k in range(lo, lo + block):
                if b == 0:
                    options.append(lang.Assign(target, lang.Var(k)))
                else:
                    options.append(
                        lang.Assign(target, lang.Mul(lang.Var(target), lang.Var(k)))
                    )
            choice = options[-1]
            for opt in reversed(options[:-1]):
                choice = lang.Choose(opt, choice)
            commands.append(choice)
    return Program(lang.seq_of(commands), n)


# --- random corpora -------------------------------------------------------------


def random_program(
    rng: random.Random,
    max_vars: int = 4,
    max_size: int = 15,
    max_nesting: int = 2,
) -> Program:
    """Seeded random program for fuzzing the analyzer against the oracle."""
    n = rng.randint(1, max_vars)

    def rand_expr(depth: int) -> lang.Expr:
        if depth <= 0 or rng.random() < 0.5:
            return lang.Var(rng.randint(1, n))
        op = lang.Add if rng.random() < 0.7 else lang.Mul
        return op(rand_expr(depth - 1), rand_expr(depth - 1))

    def rand_command(size: int, nesting: int) -> tuple[lang.Command, int]:
        roll = rng.random()
        if size <= 1:
            roll = 0.0
        if roll < 0.45:
            return lang.Assign(rng.randint(1, n), rand_expr(2)), 1
        if roll < 0.6:
            left, used = rand_command(size - 1, nesting)
            right, used2 = rand_command(size - 1 - used, nesting)
            return lang.Choose(left, right), 1 + used + used2
        if roll < 0.75 and nesting > 0:
            body, used = rand_command(size - 1, nesting - 1)
            return lang.Loop(rand_expr(1), body), 1 + used
        first, used = rand_command(size - 1, nesting)
        second, used2 = rand_command(size - 1 - used, nesting)
        return lang.Seq(first, second), 1 + used + used2

    command, _ = rand_command(max_size, max_nesting)
    return Program(command, n)


def random_nat_body(
    rng: random.Random,
    n: int,
    members: int = 1,
    max_degree: int = 3,
    max_terms: int = 2,
) -> tuple[NatMultiPoly, ...]:
    """Random tau-free transition bodies with small supports."""

    def rand_mono() -> Monomial:
        deg = rng.randint(1, max_degree)
        exps: dict[int, int] = {}
        for _ in range(deg):
            v = rng.randint(1, n)
            exps[v] = exps.get(v, 0) + 1
        return Monomial.of(exps)

    out = []
    for _ in range(members):
        entries = []
        for i in range(1, n + 1):
            terms: dict[Monomial, int] = {}
            if rng.random() < 0.7:
                terms[Monomial.var(i)] = 1
            for _ in range(rng.randint(0, max_terms - 1)):
                m = rng.choice([Monomial.var(rng.randint(1, n)), rand_mono()])
                terms[m] = terms.get(m, 0) + 1
            if not terms:
                terms[Monomial.var(rng.randint(1, n))] = 1
            entries.append(NatPoly.of(terms))
        out.append(NatMultiPoly(tuple(entries)))
    return tuple(out)
