"""Command-line driver.

Subcommands:

* ``analyze``         compute worst-case bounds for a .loop program
* ``solve-sdl``       solve a raw disjunctive loop given as JSON
* ``interpret``       run or exhaustively enumerate a program
* ``check``           run the oracle battery over a directory of .loop files
* ``gen-adversarial`` emit a program with exponentially many maximal bounds

Exit codes: 0 success, 1 analysis budget exceeded, 2 usage/parse errors,
3 oracle check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, analyzer, lang, oracle
from .poly import mp_from_obj, mp_to_obj
from .sdl import Budget, BudgetExceeded, SdlProblem, solve_sdl
from .witness import derive_pattern

EXIT_OK = 0
EXIT_BUDGET = 1
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _budget_from_args(args) -> Budget:
    return Budget(
        max_degree=args.max_degree,
        max_set_size=args.max_set_size,
        max_rounds=args.max_rounds,
    )


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-degree", type=int, default=Budget().max_degree)
    p.add_argument("--max-set-size", type=int, default=Budget().max_set_size)
    p.add_argument("--max-rounds", type=int, default=Budget().max_rounds)


def _parse_state(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v.strip()) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise SystemExit(EXIT_USAGE)
    return values


def _cmd_analyze(args) -> int:
    try:
        program = lang.parse(_read_text(args.path))
    except lang.ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.instrument:
        program = lang.instrument_counters(program)
    budget = _budget_from_args(args)
    try:
        report = analyzer.analyze_program(program, budget)
    except BudgetExceeded as err:
        print(f"analysis aborted: {err}", file=sys.stderr)
        return EXIT_BUDGET
    if not args.reduce:
        report.bounds = tuple(sorted((m.erase() for m in report.mps_full), key=str))
    if args.json:
        obj = analyzer.report_to_obj(report, __version__, args.witness)
        print(json.dumps(obj, indent=2))
    else:
        print(analyzer.report_to_text(report, __version__, args.witness))
    return EXIT_OK


def _cmd_solve_sdl(args) -> int:
    try:
        obj = json.loads(_read_text(args.path))
        arity = int(obj["arity"])
        body = tuple(mp_from_obj(entry) for entry in obj["body"])
        budget_obj = obj.get("budget", {})
        budget = Budget(
            max_degree=budget_obj.get("max_degree", args.max_degree),
            max_set_size=budget_obj.get("max_set_size", args.max_set_size),
            max_rounds=budget_obj.get("max_rounds", args.max_rounds),
        )
        problem = SdlProblem(body, arity, budget)
    except (KeyError, ValueError, json.JSONDecodeError) as err:
        print(f"bad SDL input: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        solution = solve_sdl(problem)
    except BudgetExceeded as err:
        print(f"solve aborted: {err}", file=sys.stderr)
        return EXIT_BUDGET
    if args.json:
        bounds = []
        for mp, deriv in solution.bounds:
            entry = {"mp": str(mp), "json": mp_to_obj(mp)}
            if args.witness and not mp.super_entries:
                entry["pattern"] = str(derive_pattern(deriv, arity))
            bounds.append(entry)
        print(
            json.dumps(
                {
                    "version": __version__,
                    "arity": arity,
                    "bounds": bounds,
                    "superpoly": sorted(solution.superpoly_vars),
                    "stats": {
                        "rounds": solution.rounds_used,
                        "elements": solution.elements_explored,
                        "restarts": solution.restarts,
                    },
                },
                indent=2,
            )
        )
    else:
        print(f"arity: {arity}")
        for mp, deriv in solution.bounds:
            line = f"  {mp}"
            if args.witness and not mp.super_entries:
                line += f"  realized by  {derive_pattern(deriv, arity) or 'ε'}"
            print(line)
        if solution.superpoly_vars:
            supers = " ".join(f"x{i}" for i in sorted(solution.superpoly_vars))
            print(f"superpolynomial: {supers}")
    return EXIT_OK


def _cmd_interpret(args) -> int:
    try:
        program = lang.parse(_read_text(args.path))
    except lang.ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.instrument:
        program = lang.instrument_counters(program)
    if args.input is None:
        print("interpret requires --input", file=sys.stderr)
        return EXIT_USAGE
    state = _parse_state(args.input)
    if len(state) != program.n:
        print(
            f"state has {len(state)} values, program needs {program.n}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if args.enumerate:
        result = lang.enumerate_finals(program, state, args.enum_budget)
        if args.json:
            print(
                json.dumps(
                    {
                        "finals": [list(s) for s in result.states],
                        "truncated": result.truncated,
                    }
                )
            )
        else:
            for s in result.states:
                print(",".join(str(v) for v in s))
            if result.truncated:
                print("(truncated)", file=sys.stderr)
        return EXIT_BUDGET if result.truncated else EXIT_OK
    final = lang.eager_schedule_run(program, state)
    if args.json:
        print(json.dumps({"final": list(final)}))
    else:
        print(",".join(str(v) for v in final))
    return EXIT_OK


def _cmd_check(args) -> int:
    directory = Path(args.path)
    files = sorted(directory.glob("*.loop"))
    if not files:
        print(f"no .loop files in {directory}", file=sys.stderr)
        return EXIT_USAGE
    budget = _budget_from_args(args)
    grid_values = list(range(args.grid + 1))
    failures = 0
    results = []
    for path in files:
        outcome = _check_one(path, budget, grid_values, args)
        results.append(outcome)
        status = "ok" if outcome["passed"] else "FAIL"
        if not args.json:
            print(f"{status:4} {outcome['name']}: {outcome['summary']}")
        if not outcome["passed"]:
            failures += 1
    if args.json:
        print(json.dumps({"results": results, "failures": failures}, indent=2))
    elif failures:
        print(f"{failures} of {len(files)} programs failed")
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def _check_one(path: Path, budget: Budget, grid_values, args) -> dict:
    name = path.name
    try:
        program = lang.parse(path.read_text(encoding="utf-8"))
    except lang.ParseError as err:
        return {"name": name, "passed": False, "summary": f"parse error: {err}"}
    try:
        report = analyzer.analyze_program(program, budget)
    except BudgetExceeded as err:
        return {"name": name, "passed": False, "summary": f"budget: {err}"}
    problems: list[str] = []
    expect_path = path.with_suffix(".loop.expect.json")
    if expect_path.exists():
        expectations = json.loads(expect_path.read_text(encoding="utf-8"))
        problems += _check_expectations(program, report, expectations, args)
    grid = oracle.Grid.uniform(program.n, grid_values)
    try:
        upper = oracle.check_upper(program, report, grid, cap=args.cap)
        if not upper.passed:
            problems.append(f"upper-bound check failed: {upper.counterexamples[0]}")
    except BudgetExceeded as err:
        problems.append(f"upper-bound check aborted: {err}")
    summary = "; ".join(problems) if problems else (
        f"pb={{{', '.join(f'x{i}' for i in sorted(report.pb))}}}"
        f" bounds={len(report.bounds)}"
    )
    return {"name": name, "passed": not problems, "summary": summary}


def _check_expectations(program, report, expectations, args) -> list[str]:
    problems = []
    if "pb" in expectations:
        want = set(expectations["pb"])
        if set(report.pb) != want:
            problems.append(f"pb {sorted(report.pb)} != expected {sorted(want)}")
    if "per_variable" in expectations:
        for key, want in expectations["per_variable"].items():
            i = int(key)
            got = report.per_variable[i]
            got_set = (
                {"SUPERPOLY"}
                if not isinstance(got, tuple)
                else {str(p) for p in got}
            )
            if got_set != set(want):
                problems.append(
                    f"per_variable[{i}] {sorted(got_set)} != expected {sorted(want)}"
                )
    if "per_variable_monomials" in expectations:
        for key, want in expectations["per_variable_monomials"].items():
            i = int(key)
            got = report.per_variable[i]
            if not isinstance(got, tuple):
                problems.append(f"per_variable[{i}] is SUPERPOLY")
                continue
            monos = {str(m) for p in got for m, _ in p.terms}
            if monos != set(want):
                problems.append(
                    f"per_variable[{i}] monomials {sorted(monos)}"
                    f" != expected {sorted(want)}"
                )
    if "growth" in expectations:
        scales = [2 ** k for k in range(1, args.scales + 1)]
        for key, want in expectations["growth"].items():
            i = int(key)
            verdict = oracle.classify_growth(program, i, scales)
            if verdict.kind != want:
                problems.append(f"growth(x{i}) = {verdict.kind}, expected {want}")
            agrees = (i in report.pb) == verdict.is_polynomial
            if not agrees:
                problems.append(
                    f"classifier disagrees with analysis on x{i}"
                )
    return problems


def _cmd_gen_adversarial(args) -> int:
    try:
        program = oracle.gen_adversarial(args.n, args.d)
    except ValueError as err:
        print(f"bad parameters: {err}", file=sys.stderr)
        return EXIT_USAGE
    print(lang.pretty(program))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopbound",
        description="Polynomial worst-case bounds for bounded-loop programs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze a .loop program")
    p.add_argument("path", help=".loop file, or - for stdin")
    p.add_argument("--json", action="store_true")
    p.add_argument("--witness", action="store_true")
    p.add_argument("--instrument", action="store_true")
    reduce_group = p.add_mutually_exclusive_group()
    reduce_group.add_argument("--reduce", dest="reduce", action="store_true", default=True)
    reduce_group.add_argument("--no-reduce", dest="reduce", action="store_false")
    _add_budget_flags(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("solve-sdl", help="solve a disjunctive loop from JSON")
    p.add_argument("path", help="JSON file, or - for stdin")
    p.add_argument("--json", action="store_true")
    p.add_argument("--witness", action="store_true")
    _add_budget_flags(p)
    p.set_defaults(func=_cmd_solve_sdl)

    p = sub.add_parser("interpret", help="run or enumerate a program")
    p.add_argument("path", help=".loop file, or - for stdin")
    p.add_argument("--input", help="comma-separated initial state")
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--instrument", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--enum-budget", type=int, default=100_000)
    p.set_defaults(func=_cmd_interpret)

    p = sub.add_parser("check", help="run the oracle battery on a directory")
    p.add_argument("path", help="directory of .loop files with expectations")
    p.add_argument("--json", action="store_true")
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--grid", type=int, default=3, help="grid values 0..N")
    p.add_argument("--scales", type=int, default=8, help="growth scales 2..2^N")
    _add_budget_flags(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("gen-adversarial", help="emit an adversarial program")
    p.add_argument("n", type=int)
    p.add_argument("d", type=int)
    p.set_defaults(func=_cmd_gen_adversarial)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())
