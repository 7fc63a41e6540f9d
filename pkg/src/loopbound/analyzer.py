"""Compositional worst-case analysis of commands.

The analysis interprets a command as a finite set of transition bounds
(multi-polynomials) in the saturated-coefficient domain:

* ``skip`` is the identity,
* an assignment is its exact symbolic transition, abstracted,
* sequencing composes the two sets pairwise,
* choice is set union, and
* a loop hands its body's set to the disjunctive-loop solver and then
  substitutes the loop-bound polynomial for tau in every result.

Loop summaries feed enclosing analyses directly in the saturated
domain, so the 1-versus-many coefficient distinction survives across
nesting; coefficients are erased only when building the final report.
A variable is polynomially bounded (in the PB set) iff no resulting
bound marks it with the absorbing SUPER entry.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lang
from .lang import Add, Assign, Choose, Command, Loop, Mul, Program, Seq, Skip, Var
from .poly import (
    SUPER,
    MultiPoly,
    NatMultiPoly,
    NatPoly,
    Poly,
    SuperPoly,
    poly_dominates,
    reduce_mp_set,
)
from .sdl import Budget, BudgetExceeded, SdlProblem, SdlSolution, solve_sdl
from .witness import Pattern, derive_pattern


def expr_to_nat(e: lang.Expr) -> NatPoly:
    """Exact polynomial of an expression over the identity state."""
    if isinstance(e, Var):
        return NatPoly.var(e.index)
    if isinstance(e, Add):
        return expr_to_nat(e.left) + expr_to_nat(e.right)
    if isinstance(e, Mul):
        return expr_to_nat(e.left) * expr_to_nat(e.right)
    raise TypeError(f"not an expression: {e!r}")


def symbolic_transition(c: Command, n: int) -> NatMultiPoly:
    """Exact transition of loop-free, choose-free code."""
    if isinstance(c, Skip):
        return NatMultiPoly.identity(n)
    if isinstance(c, Assign):
        return NatMultiPoly.identity(n).with_entry(c.target, expr_to_nat(c.rhs))
    if isinstance(c, Seq):
        first = symbolic_transition(c.first, n)
        second = symbolic_transition(c.second, n)
        return second.after(first)
    raise ValueError(f"not straight-line code: {c!r}")


@dataclass
class LoopSummary:
    """Solver output for one loop occurrence, kept for witness reports."""

    loop_id: str
    bound_expr: lang.Expr
    body: tuple[MultiPoly, ...]
    solution: SdlSolution

    def witnesses(self) -> tuple[tuple[MultiPoly, Pattern], ...]:
        """(bound, pattern) pairs for the SUPER-free tau-bounds."""
        out = []
        for mp, deriv in self.solution.bounds:
            if mp.super_entries:
                continue
            out.append((mp, derive_pattern(deriv, mp.arity)))
        return tuple(out)


@dataclass
class AbstractResult:
    """Set of transition bounds for a command, plus per-loop summaries."""

    mps: tuple[MultiPoly, ...]
    arity: int
    loops: tuple[LoopSummary, ...]


def _dedup(mps) -> tuple[MultiPoly, ...]:
    seen: set[MultiPoly] = set()
    out: list[MultiPoly] = []
    for m in mps:
        if m not in seen:
            seen.add(m)
            out.append(m)
    return tuple(out)


def analyze(c: Command, n: int, budget: Budget = Budget()) -> AbstractResult:
    """Abstract semantics of a command over n variables."""
    if lang.max_var_index(c) > n:
        raise ValueError("command uses variables beyond the declared arity")
    loops: list[LoopSummary] = []

    def go(cmd: Command) -> tuple[MultiPoly, ...]:
        if isinstance(cmd, Skip):
            return (MultiPoly.identity(n),)
        if isinstance(cmd, Assign):
            return (symbolic_transition(cmd, n).alpha(),)
        if isinstance(cmd, Seq):
            first = go(cmd.first)
            second = go(cmd.second)
            if len(first) * len(second) > budget.max_set_size:
                raise BudgetExceeded(
                    "set-size",
                    f"composition of {len(first)} x {len(second)} bounds",
                )
            return _dedup(b.after(a) for a in first for b in second)
        if isinstance(cmd, Choose):
            return _dedup(go(cmd.left) + go(cmd.right))
        if isinstance(cmd, Loop):
            body = go(cmd.body)
            solution = solve_sdl(SdlProblem(body, n, budget))
            loops.append(
                LoopSummary(
                    loop_id=f"loop{len(loops) + 1}",
                    bound_expr=cmd.bound,
                    body=body,
                    solution=solution,
                )
            )
            bound_poly = expr_to_nat(cmd.bound).alpha()
            return _dedup(mp.subst_tau(bound_poly) for mp in solution.mps)
        raise TypeError(f"not a command: {cmd!r}")

    mps = go(c)
    return AbstractResult(mps=mps, arity=n, loops=tuple(loops))


def per_variable_bounds(
    mps, i: int
) -> SuperPoly | tuple[Poly, ...]:
    """Dominance-maximal erased entry-i polynomials, or SUPER.

    SUPER is absorbing: if any bound marks i, the variable has no
    polynomial bound at all.
    """
    polys: list[Poly] = []
    for mp in mps:
        e = mp.entries[i - 1]
        if isinstance(e, SuperPoly):
            return SUPER
        polys.append(e.erase().reduce())
    uniq = sorted(set(polys), key=str)
    maximal = [
        p
        for p in uniq
        if not any(q != p and poly_dominates(q, p) for q in uniq)
    ]
    return tuple(sorted(maximal, key=str))


@dataclass
class AnalysisReport:
    """Final report: PB set, reduced bounds, per-variable maxima, stats."""

    n: int
    pb: frozenset[int]
    bounds: tuple[MultiPoly, ...]
    mps_full: tuple[MultiPoly, ...]
    per_variable: dict[int, SuperPoly | tuple[Poly, ...]]
    loops: tuple[LoopSummary, ...]
    budget: Budget
    stats: dict


def analyze_program(p: Program, budget: Budget = Budget()) -> AnalysisReport:
    result = analyze(p.command, p.n, budget)
    erased = _dedup(mp.erase() for mp in result.mps)
    pb = frozenset(
        i
        for i in range(1, p.n + 1)
        if not any(isinstance(mp.entries[i - 1], SuperPoly) for mp in result.mps)
    )
    bounds = reduce_mp_set(erased)
    per_variable = {
        i: per_variable_bounds(result.mps, i) for i in range(1, p.n + 1)
    }
    stats = {
        "rounds": sum(s.solution.rounds_used for s in result.loops),
        "elements": sum(s.solution.elements_explored for s in result.loops),
        "restarts": sum(s.solution.restarts for s in result.loops),
        "unreduced_bounds": len(erased),
        "loops": len(result.loops),
    }
    return AnalysisReport(
        n=p.n,
        pb=pb,
        bounds=bounds,
        mps_full=result.mps,
        per_variable=per_variable,
        loops=result.loops,
        budget=budget,
        stats=stats,
    )


# --- rendering ---------------------------------------------------------------


def report_to_obj(
    report: AnalysisReport, version: str, include_witnesses: bool = False
) -> dict:
    """JSON-ready report with a stable field order."""
    per_variable = {}
    for i in sorted(report.per_variable):
        v = report.per_variable[i]
        per_variable[f"x{i}"] = (
            "SUPERPOLY" if isinstance(v, SuperPoly) else [str(p) for p in v]
        )
    witnesses: dict = {}
    if include_witnesses:
        for summary in report.loops:
            witnesses[summary.loop_id] = {
                "bound": lang.pretty_expr(summary.bound_expr),
                "body": [str(m) for m in summary.body],
                "bounds": [
                    {"mp": str(mp), "pattern": str(pattern)}
                    for mp, pattern in summary.witnesses()
                ],
            }
    return {
        "version": version,
        "n": report.n,
        "budget": {
            "max_degree": report.budget.max_degree,
            "max_set_size": report.budget.max_set_size,
            "max_rounds": report.budget.max_rounds,
        },
        "pb": sorted(report.pb),
        "bounds": [str(mp) for mp in report.bounds],
        "per_variable": per_variable,
        "superpoly": sorted(set(range(1, report.n + 1)) - report.pb),
        "witnesses": witnesses,
        "stats": report.stats,
    }


def report_to_text(
    report: AnalysisReport, version: str, include_witnesses: bool = False
) -> str:
    lines = [
        f"variables: {report.n}",
        f"polynomially bounded: "
        + (" ".join(f"x{i}" for i in sorted(report.pb)) or "(none)"),
        f"bounds ({len(report.bounds)} maximal of {report.stats['unreduced_bounds']} raw):",
    ]
    for mp in report.bounds:
        lines.append(f"  {mp}")
    lines.append("per-variable worst case:")
    for i in sorted(report.per_variable):
        v = report.per_variable[i]
        if isinstance(v, SuperPoly):
            lines.append(f"  x{i}: SUPERPOLY")
        else:
            lines.append(f"  x{i}: " + "  |  ".join(str(p) for p in v))
    if include_witnesses:
        for summary in report.loops:
            lines.append(
                f"witnesses for {summary.loop_id}"
                f" (bound {lang.pretty_expr(summary.bound_expr)}):"
            )
            for k, m in enumerate(summary.body):
                lines.append(f"  p{k} = {m}")
            for mp, pattern in summary.witnesses():
                lines.append(f"  {mp}  realized by  {pattern or 'ε'}")
    lines.append(
        "stats: rounds={rounds} elements={elements} restarts={restarts}".format(
            **report.stats
        )
    )
    return "\n".join(lines)
