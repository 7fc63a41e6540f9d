"""Core bounded-loop language: syntax, parsing and executable semantics.

The language has variables ``X1, X2, ...`` over non-negative integers,
expressions built from ``+`` and ``*`` only (no constants, no
subtraction), and five command forms::

    skip
    Xk := E
    C1; C2
    loop E { C }
    choose { C1 } or { C2 }

``loop E { C }`` runs ``C`` a nondeterministic number of times bounded
by the value of ``E`` at loop entry; ``choose`` takes either branch.
Programs are plain text (UTF-8, extension ``.loop``), ``#`` starts a
comment, and an optional first-line directive ``# vars: n`` declares
spare variables beyond the largest index used.

The interpreter resolves nondeterminism through a schedule: a flat list
of decisions, each either ``"left"``/``"right"`` (for choose) or a
non-negative int (iteration count for a loop, consumed at loop entry).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Sequence, Union


# --- abstract syntax -------------------------------------------------------


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Add:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul:
    left: Expr
    right: Expr


Expr = Union[Var, Add, Mul]


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    target: int
    rhs: Expr


@dataclass(frozen=True)
class Seq:
    first: Command
    second: Command


@dataclass(frozen=True)
class Loop:
    bound: Expr
    body: Command


@dataclass(frozen=True)
class Choose:
    left: Command
    right: Command


Command = Union[Skip, Assign, Seq, Loop, Choose]


@dataclass(frozen=True)
class Program:
    command: Command
    n: int


State = tuple[int, ...]

CHOOSE_LEFT = "left"
CHOOSE_RIGHT = "right"
Decision = Union[str, int]


def seq_of(commands: Sequence[Command]) -> Command:
    """Right-nested sequence of the given commands."""
    if not commands:
        return Skip()
    out = commands[-1]
    for c in reversed(commands[:-1]):
        out = Seq(c, out)
    return out


def max_var_index(c: Command) -> int:
    def expr_max(e: Expr) -> int:
        if isinstance(e, Var):
            return e.index
        return max(expr_max(e.left), expr_max(e.right))

    if isinstance(c, Skip):
        return 0
    if isinstance(c, Assign):
        return max(c.target, expr_max(c.rhs))
    if isinstance(c, Seq):
        return max(max_var_index(c.first), max_var_index(c.second))
    if isinstance(c, Loop):
        return max(expr_max(c.bound), max_var_index(c.body))
    return max(max_var_index(c.left), max_var_index(c.right))


# --- parsing ---------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_SYMBOLS = (":=", ";", "+", "*", "(", ")", "{", "}")
_KEYWORDS = ("skip", "loop", "choose", "or")


@dataclass(frozen=True)
class _Token:
    kind: str  # "var" | "kw" | "sym" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if text.startswith(":=", i):
            tokens.append(_Token("sym", ":=", line, col))
            i += 2
            col += 2
            continue
        if ch in ";+*(){}":
            tokens.append(_Token("sym", ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha():
            start = i
            while i < len(text) and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            width = i - start
            if word in _KEYWORDS:
                tokens.append(_Token("kw", word, line, col))
            elif word[0] in "Xx" and word[1:].isdigit():
                tokens.append(_Token("var", word, line, col))
            else:
                raise ParseError(f"unexpected word {word!r}", line, col)
            col += width
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    """Recursive-descent parser; ``*`` binds tighter than ``+``,
    ``;`` is right-associative, braces are mandatory for blocks."""

    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want!r}, got {got!r}", tok.line, tok.col)
        return self.next()

    def parse_command(self) -> Command:
        parts = [self.parse_atom()]
        while self.peek().kind == "sym" and self.peek().text == ";":
            self.next()
            parts.append(self.parse_atom())
        return seq_of(parts)

    def parse_atom(self) -> Command:
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "skip":
            self.next()
            return Skip()
        if tok.kind == "kw" and tok.text == "loop":
            self.next()
            bound = self.parse_expr()
            self.expect("sym", "{")
            body = self.parse_command()
            self.expect("sym", "}")
            return Loop(bound, body)
        if tok.kind == "kw" and tok.text == "choose":
            self.next()
            self.expect("sym", "{")
            left = self.parse_command()
            self.expect("sym", "}")
            self.expect("kw", "or")
            self.expect("sym", "{")
            right = self.parse_command()
            self.expect("sym", "}")
            return Choose(left, right)
        if tok.kind == "var":
            var = self.next()
            self.expect("sym", ":=")
            rhs = self.parse_expr()
            return Assign(int(var.text[1:]), rhs)
        got = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(f"expected a command, got {got!r}", tok.line, tok.col)

    def parse_expr(self) -> Expr:
        e = self.parse_term()
        while self.peek().kind == "sym" and self.peek().text == "+":
            self.next()
            e = Add(e, self.parse_term())
        return e

    def parse_term(self) -> Expr:
        e = self.parse_factor()
        while self.peek().kind == "sym" and self.peek().text == "*":
            self.next()
            e = Mul(e, self.parse_factor())
        return e

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "var":
            self.next()
            index = int(tok.text[1:])
            if index < 1:
                raise ParseError("variable index must be >= 1", tok.line, tok.col)
            return Var(index)
        if tok.kind == "sym" and tok.text == "(":
            self.next()
            e = self.parse_expr()
            self.expect("sym", ")")
            return e
        got = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(f"expected an expression, got {got!r}", tok.line, tok.col)


def _vars_directive(text: str) -> int | None:
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            rest = line[1:].strip()
            if rest.startswith("vars:"):
                value = rest[len("vars:"):].strip()
                if not value.isdigit():
                    raise ParseError(f"bad vars directive {line!r}", 1, 1)
                return int(value)
            return None
        return None
    return None


def parse(text: str) -> Program:
    """Parse program text; n is the max index used unless declared."""
    declared = _vars_directive(text)
    parser = _Parser(_tokenize(text))
    command = parser.parse_command()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    used = max_var_index(command)
    n = max(used, 1)
    if declared is not None:
        if declared < used:
            raise ParseError(
                f"vars directive declares {declared} but X{used} is used", 1, 1
            )
        n = max(declared, 1)
    return Program(command, n)


# --- pretty printing -------------------------------------------------------


def pretty_expr(e: Expr, parent: str = "") -> str:
    if isinstance(e, Var):
        return f"X{e.index}"
    if isinstance(e, Add):
        left = pretty_expr(e.left, "add")
        right = pretty_expr(e.right, "add_right")
        s = f"{left} + {right}"
        return f"({s})" if parent in ("mul", "mul_right", "add_right") else s
    left = pretty_expr(e.left, "mul")
    right = pretty_expr(e.right, "mul_right")
    s = f"{left} * {right}"
    return f"({s})" if parent == "mul_right" else s


def pretty_command(c: Command) -> str:
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Assign):
        return f"X{c.target} := {pretty_expr(c.rhs)}"
    if isinstance(c, Seq):
        return f"{pretty_command(c.first)}; {pretty_command(c.second)}"
    if isinstance(c, Loop):
        return f"loop {pretty_expr(c.bound)} {{ {pretty_command(c.body)} }}"
    return (
        f"choose {{ {pretty_command(c.left)} }}"
        f" or {{ {pretty_command(c.right)} }}"
    )


def pretty(p: Program) -> str:
    """Canonical text; re-parsing yields an identical Program."""
    header = ""
    if p.n > max(max_var_index(p.command), 1):
        header = f"# vars: {p.n}\n"
    return header + pretty_command(p.command)


# --- semantics -------------------------------------------------------------


class ScheduleError(ValueError):
    pass


def eval_expr(e: Expr, state: Sequence[int]) -> int:
    if isinstance(e, Var):
        return state[e.index - 1]
    if isinstance(e, Add):
        return eval_expr(e.left, state) + eval_expr(e.right, state)
    return eval_expr(e.left, state) * eval_expr(e.right, state)


def _check_state(p: Program, state: Sequence[int]) -> State:
    s = tuple(state)
    if len(s) != p.n:
        raise ValueError(f"state has arity {len(s)}, program needs {p.n}")
    if any(v < 0 for v in s):
        raise ValueError("state values must be non-negative")
    return s


def run_schedule(p: Program, state: Sequence[int], schedule: Sequence[Decision]) -> State:
    """Execute under explicit decisions; surplus decisions are ignored."""
    decisions = iter(schedule)

    def take() -> Decision:
        try:
            return next(decisions)
        except StopIteration:
            raise ScheduleError("schedule exhausted") from None

    def run(c: Command, s: State) -> State:
        if isinstance(c, Skip):
            return s
        if isinstance(c, Assign):
            value = eval_expr(c.rhs, s)
            return s[: c.target - 1] + (value,) + s[c.target:]
        if isinstance(c, Seq):
            return run(c.second, run(c.first, s))
        if isinstance(c, Choose):
            d = take()
            if d == CHOOSE_LEFT:
                return run(c.left, s)
            if d == CHOOSE_RIGHT:
                return run(c.right, s)
            raise ScheduleError(f"expected left/right decision, got {d!r}")
        bound = eval_expr(c.bound, s)
        d = take()
        if not isinstance(d, int) or d < 0:
            raise ScheduleError(f"expected an iteration count, got {d!r}")
        if d > bound:
            raise ScheduleError(f"iteration count {d} exceeds bound {bound}")
        for _ in range(d):
            s = run(c.body, s)
        return s

    return run(p.command, _check_state(p, state))


def sample_schedule(
    p: Program, state: Sequence[int], rng: random.Random
) -> tuple[list[Decision], State]:
    """Draw a uniformly random valid schedule; returns it with its final state."""
    schedule: list[Decision] = []

    def run(c: Command, s: State) -> State:
        if isinstance(c, Skip):
            return s
        if isinstance(c, Assign):
            value = eval_expr(c.rhs, s)
            return s[: c.target - 1] + (value,) + s[c.target:]
        if isinstance(c, Seq):
            return run(c.second, run(c.first, s))
        if isinstance(c, Choose):
            d = rng.choice((CHOOSE_LEFT, CHOOSE_RIGHT))
            schedule.append(d)
            return run(c.left if d == CHOOSE_LEFT else c.right, s)
        bound = eval_expr(c.bound, s)
        count = rng.randint(0, bound)
        schedule.append(count)
        for _ in range(count):
            s = run(c.body, s)
        return s

    final = run(p.command, _check_state(p, state))
    return schedule, final


def eager_schedule_run(p: Program, state: Sequence[int]) -> State:
    """Run taking every loop to its full bound and the left choose branch."""

    def run(c: Command, s: State) -> State:
        if isinstance(c, Skip):
            return s
        if isinstance(c, Assign):
            value = eval_expr(c.rhs, s)
            return s[: c.target - 1] + (value,) + s[c.target:]
        if isinstance(c, Seq):
            return run(c.second, run(c.first, s))
        if isinstance(c, Choose):
            return run(c.left, s)
        for _ in range(eval_expr(c.bound, s)):
            s = run(c.body, s)
        return s

    return run(p.command, _check_state(p, state))


@dataclass(frozen=True)
class EnumerationResult:
    """All reachable final states, sorted; ``truncated`` marks a cut-off."""

    states: tuple[State, ...]
    truncated: bool
    explored: int

    def __iter__(self) -> Iterator[State]:
        return iter(self.states)


class _Exploration:
    def __init__(self, budget: int):
        if budget <= 0:
            raise ValueError("budget must be positive")
        self.budget = budget
        self.explored = 0
        self.truncated = False

    def charge(self, amount: int = 1) -> bool:
        self.explored += amount
        if self.explored > self.budget:
            self.truncated = True
            return False
        return True


def enumerate_finals(p: Program, state: Sequence[int], budget: int) -> EnumerationResult:
    """Exhaustively concretize the nondeterministic semantics.

    Explores branches left-first and iteration counts in increasing
    order, deduplicating states level by level, so the result (even a
    truncated one) is deterministic for a given budget.
    """
    ex = _Exploration(budget)

    def finals(c: Command, s: State) -> set[State]:
        if ex.truncated:
            return set()
        if isinstance(c, Skip):
            return {s}
        if isinstance(c, Assign):
            value = eval_expr(c.rhs, s)
            out = s[: c.target - 1] + (value,) + s[c.target:]
            ex.charge()
            return {out}
        if isinstance(c, Seq):
            acc: set[State] = set()
            for mid in sorted(finals(c.first, s)):
                acc |= finals(c.second, mid)
                if ex.truncated:
                    break
            return acc
        if isinstance(c, Choose):
            return finals(c.left, s) | finals(c.right, s)
        bound = eval_expr(c.bound, s)
        reached: set[State] = {s}
        level: set[State] = {s}
        ex.charge()
        for _ in range(bound):
            nxt: set[State] = set()
            for u in sorted(level):
                nxt |= finals(c.body, u)
                if ex.truncated:
                    break
            if ex.truncated or nxt == level:
                reached |= nxt
                break
            level = nxt
            reached |= nxt
        return reached

    states = finals(p.command, _check_state(p, state))
    return EnumerationResult(tuple(sorted(states)), ex.truncated, ex.explored)


# --- counter instrumentation ----------------------------------------------


def instrument_counters(p: Program) -> Program:
    """Add a unit variable U = X(n+1) and counter C = X(n+2).

    ``C := C + U`` is inserted as the first statement of every loop body
    (nested loops included), so with U set to 1 the final counter value
    is the number of loop-body executions; its worst-case bound equals
    the step-count bound times U.
    """
    unit = p.n + 1
    counter = p.n + 2
    bump = Assign(counter, Add(Var(counter), Var(unit)))

    def walk(c: Command) -> Command:
        if isinstance(c, (Skip, Assign)):
            return c
        if isinstance(c, Seq):
            return Seq(walk(c.first), walk(c.second))
        if isinstance(c, Choose):
            return Choose(walk(c.left), walk(c.right))
        return Loop(c.bound, Seq(bump, walk(c.body)))

    return Program(walk(p.command), p.n + 2)
