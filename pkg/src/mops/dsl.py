"""Plan template language: parsing, printing, evaluation, instantiation.

A template declares named tunable parameters (scalars or fixed-length
vectors) and a list of actions whose arguments are arithmetic expressions
over those parameters, scene frame accessors and a small function set.

Example::

    params {
      pos = [0.32, 0.24];
      size = 0.2;
    }
    plan {
      draw_line(pos[0] - size, pos[1], pos[0] + size, pos[1]);
    }

Parsing is recursive descent over a hand-rolled token stream; every
syntax problem raises PlanSyntaxError with a 1-based line and column.
Printing produces canonical text whose re-parse yields an identical AST.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import (
    ArityMismatch,
    DivisionByZero,
    PlanSyntaxError,
    UnboundParameter,
    UndeclaredIdentifier,
    UnknownAction,
    UnknownAttribute,
)
from .scene import SceneState

# Action vocabulary with argument arity. pick takes a single frame-name
# string; all other arguments are numeric expressions.
ACTION_ARITY = {
    "draw_line": 4,
    "push_motion": 4,
    "pick": 1,
    "place_sr": 5,
}
STRING_ARG_ACTIONS = {"pick"}

UNARY_FUNCS = {"sin": math.sin, "cos": math.cos, "abs": abs}
BINARY_FUNCS = {"min": min, "max": max}
RESERVED = {"params", "plan", "frame", "pi", "sqrt"} | set(UNARY_FUNCS) | set(BINARY_FUNCS)

FRAME_SCALAR_ATTRS = ("x_pos", "y_pos", "z_pos", "x_rot", "y_rot", "z_rot")

MAX_EXPR_DEPTH = 200

GRAMMAR = """\
template     := [param_block] plan_block
param_block  := "params" "{" { param_decl } "}"
param_decl   := ident "=" init ";"
init         := number | "[" number { "," number } "]"
plan_block   := "plan" "{" { action } "}"
action       := ident "(" arg { "," arg } ")" ";"
arg          := expr | string            (string only for pick's frame name)
expr         := term { ("+" | "-") term }
term         := factor { ("*" | "/") factor }
factor       := "-" factor | atom
atom         := number | "pi" | ident [ "[" integer "]" ]
              | fn1 "(" expr ")" | fn2 "(" expr "," expr ")"
              | "frame" "(" string ")" "." attr
              | "(" expr ")"
fn1          := "sin" | "cos" | "sqrt" | "abs"
fn2          := "min" | "max"
attr         := "x_pos" | "y_pos" | "z_pos" | "x_rot" | "y_rot" | "z_rot"
              | "size" "[" integer "]"
comment      := "#" to end of line

Actions: draw_line(x0, y0, x1, y1)   board-plane line segment in meters
         push_motion(x0, y0, x1, y1) straight planar push in meters
         pick(frame_name)            grasp (no trajectory lowering)
         place_sr(x, y, z, rot, yaw) place (no trajectory lowering)
Vector parameters are indexed with a constant integer, e.g. offs[3], and
are flattened into the tunable parameter vector in declaration order.
"""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class ParamRef:
    name: str
    index: int | None = None


@dataclass(frozen=True)
class FrameRef:
    frame: str
    attr: str
    index: int | None = None


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Union[Num, ParamRef, FrameRef, Neg, Bin, Call]
ArgValue = Union[Expr, str]


@dataclass(frozen=True)
class TemplateAction:
    name: str
    args: tuple[ArgValue, ...]


@dataclass(frozen=True)
class PlanTemplate:
    """Parsed template: ordered parameter declarations plus actions."""

    params: tuple[tuple[str, Union[float, tuple[float, ...]]], ...]
    actions: tuple[TemplateAction, ...]

    def param_dim(self) -> int:
        total = 0
        for _, init in self.params:
            total += len(init) if isinstance(init, tuple) else 1
        return total

    def initial_vector(self) -> list[float]:
        """Initial guesses flattened in declaration order."""
        flat: list[float] = []
        for _, init in self.params:
            if isinstance(init, tuple):
                flat.extend(init)
            else:
                flat.append(init)
        return flat

    def bind(self, alpha_c: Sequence[float]) -> dict[str, Union[float, tuple[float, ...]]]:
        """Map a flat vector back onto named parameters."""
        alpha_c = [float(v) for v in alpha_c]
        if len(alpha_c) != self.param_dim():
            raise ArityMismatch(
                f"expected {self.param_dim()} parameter values, got {len(alpha_c)}")
        env: dict[str, Union[float, tuple[float, ...]]] = {}
        cursor = 0
        for name, init in self.params:
            if isinstance(init, tuple):
                env[name] = tuple(alpha_c[cursor:cursor + len(init)])
                cursor += len(init)
            else:
                env[name] = alpha_c[cursor]
                cursor += 1
        return env


@dataclass(frozen=True)
class PlanAction:
    """Fully evaluated action: name plus numeric (or frame-name) arguments."""

    name: str
    args: tuple[Union[float, str], ...]


ActionSequence = tuple[PlanAction, ...]


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[(){}\[\];,=+\-*/.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | ident | string | punct | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PlanSyntaxError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        tok = m.group()
        if kind == "newline":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(tok)
        else:
            if kind == "string" and "\n" in tok:
                raise PlanSyntaxError(line, col, "unterminated string")
            tokens.append(_Token(kind, tok, line, col))
            col += len(tok)
        pos = m.end()
        if kind is None:
            break
    # catch unterminated strings: a lone double quote never matches
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.param_shapes: dict[str, int | None] = {}  # None = scalar

    # -- token plumbing

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, tok: _Token, msg: str) -> PlanSyntaxError:
        return PlanSyntaxError(tok.line, tok.col, msg)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text if tok.kind != "eof" else "end of input"
            raise self.error(tok, f"expected {want!r}, got {got!r}")
        return self.advance()

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.advance()
        return None

    # -- grammar rules

    def parse_template(self) -> PlanTemplate:
        params: list[tuple[str, Union[float, tuple[float, ...]]]] = []
        if self.peek().kind == "ident" and self.peek().text == "params":
            self.advance()
            self.expect("punct", "{")
            while not self.accept("punct", "}"):
                params.append(self.parse_param_decl())
        tok = self.peek()
        if not (tok.kind == "ident" and tok.text == "plan"):
            raise self.error(tok, "expected 'plan' block")
        self.advance()
        self.expect("punct", "{")
        actions: list[TemplateAction] = []
        while not self.accept("punct", "}"):
            actions.append(self.parse_action())
        tok = self.peek()
        if tok.kind != "eof":
            raise self.error(tok, f"unexpected trailing input {tok.text!r}")
        return PlanTemplate(params=tuple(params), actions=tuple(actions))

    def parse_param_decl(self) -> tuple[str, Union[float, tuple[float, ...]]]:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(tok, "expected parameter name")
        name = tok.text
        if name in RESERVED:
            raise self.error(tok, f"{name!r} is reserved and cannot name a parameter")
        if name in self.param_shapes:
            raise self.error(tok, f"duplicate parameter {name!r}")
        self.advance()
        self.expect("punct", "=")
        if self.accept("punct", "["):
            values = [self.parse_signed_number()]
            while self.accept("punct", ","):
                values.append(self.parse_signed_number())
            self.expect("punct", "]")
            init: Union[float, tuple[float, ...]] = tuple(values)
            self.param_shapes[name] = len(values)
        else:
            init = self.parse_signed_number()
            self.param_shapes[name] = None
        self.expect("punct", ";")
        return (name, init)

    def parse_signed_number(self) -> float:
        sign = 1.0
        while self.accept("punct", "-"):
            sign = -sign
        tok = self.peek()
        if tok.kind != "num":
            raise self.error(tok, "expected a number")
        self.advance()
        return sign * float(tok.text)

    def parse_action(self) -> TemplateAction:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(tok, "expected an action name")
        name = tok.text
        if name not in ACTION_ARITY:
            raise UnknownAction(name)
        self.advance()
        self.expect("punct", "(")
        args: list[ArgValue] = []
        if not self.accept("punct", ")"):
            args.append(self.parse_arg(name))
            while self.accept("punct", ","):
                args.append(self.parse_arg(name))
            self.expect("punct", ")")
        self.expect("punct", ";")
        if len(args) != ACTION_ARITY[name]:
            raise self.error(
                tok, f"{name} takes {ACTION_ARITY[name]} arguments, got {len(args)}")
        return TemplateAction(name=name, args=tuple(args))

    def parse_arg(self, action: str) -> ArgValue:
        tok = self.peek()
        if tok.kind == "string":
            if action not in STRING_ARG_ACTIONS:
                raise self.error(tok, f"{action} does not take a string argument")
            self.advance()
            return tok.text[1:-1]
        if action in STRING_ARG_ACTIONS:
            raise self.error(tok, f"{action} takes a quoted frame name")
        return self.parse_expr(0)

    def parse_expr(self, depth: int) -> Expr:
        if depth > MAX_EXPR_DEPTH:
            tok = self.peek()
            raise self.error(tok, "expression nesting too deep")
        node = self.parse_term(depth + 1)
        while True:
            if self.accept("punct", "+"):
                node = Bin("+", node, self.parse_term(depth + 1))
            elif self.accept("punct", "-"):
                node = Bin("-", node, self.parse_term(depth + 1))
            else:
                return node

    def parse_term(self, depth: int) -> Expr:
        node = self.parse_factor(depth + 1)
        while True:
            if self.accept("punct", "*"):
                node = Bin("*", node, self.parse_factor(depth + 1))
            elif self.accept("punct", "/"):
                node = Bin("/", node, self.parse_factor(depth + 1))
            else:
                return node

    def parse_factor(self, depth: int) -> Expr:
        if depth > MAX_EXPR_DEPTH:
            raise self.error(self.peek(), "expression nesting too deep")
        if self.accept("punct", "-"):
            return Neg(self.parse_factor(depth + 1))
        return self.parse_atom(depth + 1)

    def parse_index(self) -> int:
        tok = self.expect("num")
        value = float(tok.text)
        if value != int(value):
            raise self.error(tok, "index must be an integer")
        idx = int(value)
        self.expect("punct", "]")
        return idx

    def parse_atom(self, depth: int) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if self.accept("punct", "("):
            node = self.parse_expr(depth + 1)
            self.expect("punct", ")")
            return node
        if tok.kind != "ident":
            got = tok.text if tok.kind != "eof" else "end of input"
            raise self.error(tok, f"expected an expression, got {got!r}")
        name = tok.text
        self.advance()
        if name == "pi":
            return Num(math.pi)
        if name == "frame":
            return self.parse_frame_ref(tok)
        if name in UNARY_FUNCS or name == "sqrt":
            self.expect("punct", "(")
            arg = self.parse_expr(depth + 1)
            self.expect("punct", ")")
            return Call(name, (arg,))
        if name in BINARY_FUNCS:
            self.expect("punct", "(")
            a = self.parse_expr(depth + 1)
            self.expect("punct", ",")
            b = self.parse_expr(depth + 1)
            self.expect("punct", ")")
            return Call(name, (a, b))
        # plain identifier: must be a declared parameter
        if name not in self.param_shapes:
            raise UndeclaredIdentifier(name)
        shape = self.param_shapes[name]
        if self.accept("punct", "["):
            idx_tok = self.peek()
            idx = self.parse_index()
            if shape is None:
                raise self.error(tok, f"scalar parameter {name!r} cannot be indexed")
            if not (0 <= idx < shape):
                raise self.error(
                    idx_tok, f"index {idx} out of range for {name!r} of length {shape}")
            return ParamRef(name, idx)
        if shape is not None:
            raise self.error(tok, f"vector parameter {name!r} needs an index")
        return ParamRef(name, None)

    def parse_frame_ref(self, start: _Token) -> Expr:
        self.expect("punct", "(")
        tok = self.peek()
        if tok.kind != "string":
            raise self.error(tok, "frame() takes a quoted frame name")
        frame_name = tok.text[1:-1]
        self.advance()
        self.expect("punct", ")")
        self.expect("punct", ".")
        attr_tok = self.peek()
        if attr_tok.kind != "ident":
            raise self.error(attr_tok, "expected a frame attribute")
        attr = attr_tok.text
        self.advance()
        if attr == "size":
            self.expect("punct", "[")
            idx_tok = self.peek()
            idx = self.parse_index()
            if not (0 <= idx < 3):
                raise self.error(idx_tok, f"size index {idx} out of range [0, 3)")
            return FrameRef(frame_name, "size", idx)
        if attr in FRAME_SCALAR_ATTRS:
            return FrameRef(frame_name, attr, None)
        raise UnknownAttribute(attr)


def parse(text: str) -> PlanTemplate:
    """Parse template text into a PlanTemplate.

    Raises PlanSyntaxError (with position), UnknownAction,
    UndeclaredIdentifier or UnknownAttribute; never anything else.
    """
    return _Parser(text).parse_template()


# ---------------------------------------------------------------------------
# Printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _format_number(value: float) -> str:
    if value == math.pi:
        return "pi"
    text = repr(float(value))
    return text


def format_expr(e: Expr) -> str:
    return _format_expr(e, 0)


def _format_expr(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Num):
        text = _format_number(e.value)
        if e.value < 0 and parent_prec >= 3:
            return f"({text})"
        return text
    if isinstance(e, ParamRef):
        return e.name if e.index is None else f"{e.name}[{e.index}]"
    if isinstance(e, FrameRef):
        base = f'frame("{e.frame}").{e.attr}'
        return base if e.index is None else f"{base}[{e.index}]"
    if isinstance(e, Neg):
        inner = _format_expr(e.operand, 3)
        text = f"-{inner}"
        return f"({text})" if parent_prec >= 3 else text
    if isinstance(e, Call):
        args = ", ".join(_format_expr(a, 0) for a in e.args)
        return f"{e.fn}({args})"
    if isinstance(e, Bin):
        prec = _PREC[e.op]
        lhs = _format_expr(e.lhs, prec)
        # subtraction and division do not associate on the right
        rhs = _format_expr(e.rhs, prec + (1 if e.op in ("-", "/") else 0))
        # right operand of same precedence still needs parens for + and *
        # when it is itself a Bin of equal precedence, to preserve shape
        if e.op in ("+", "*") and isinstance(e.rhs, Bin) and _PREC[e.rhs.op] == prec:
            rhs = f"({rhs})"
        text = f"{lhs} {e.op} {rhs}"
        return f"({text})" if prec < parent_prec or parent_prec >= 3 else text
    raise TypeError(f"not an expression node: {e!r}")


def format_template(t: PlanTemplate) -> str:
    """Canonical text form; parse(format_template(t)) equals t."""
    lines = ["params {"]
    for name, init in t.params:
        if isinstance(init, tuple):
            body = ", ".join(repr(v) for v in init)
            lines.append(f"  {name} = [{body}];")
        else:
            lines.append(f"  {name} = {repr(init)};")
    lines.append("}")
    lines.append("plan {")
    for action in t.actions:
        rendered = []
        for arg in action.args:
            if isinstance(arg, str):
                rendered.append(f'"{arg}"')
            else:
                rendered.append(format_expr(arg))
        lines.append(f"  {action.name}({', '.join(rendered)});")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Evaluation

Env = Mapping[str, Union[float, Sequence[float]]]


def evaluate(e: Expr, env: Env, scene: SceneState) -> float:
    """Evaluate an expression to an IEEE double.

    sqrt of a negative value yields NaN rather than raising; division by
    exactly 0.0 raises DivisionByZero.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, ParamRef):
        if e.name not in env:
            raise UnboundParameter(e.name)
        value = env[e.name]
        if e.index is None:
            if isinstance(value, (list, tuple)):
                raise ArityMismatch(f"vector parameter {e.name!r} used without index")
            return float(value)
        if not isinstance(value, (list, tuple)):
            raise ArityMismatch(f"scalar parameter {e.name!r} indexed with [{e.index}]")
        if not (0 <= e.index < len(value)):
            raise ArityMismatch(
                f"index {e.index} out of range for {e.name!r} of length {len(value)}")
        return float(value[e.index])
    if isinstance(e, FrameRef):
        frame = scene.get(e.frame)  # raises UnknownFrame
        if e.attr == "size":
            return float(frame.size[e.index])
        scalar = frame.numeric_attr(e.attr)
        if scalar is None:
            raise UnknownAttribute(e.attr)
        return scalar
    if isinstance(e, Neg):
        return -evaluate(e.operand, env, scene)
    if isinstance(e, Bin):
        lhs = evaluate(e.lhs, env, scene)
        rhs = evaluate(e.rhs, env, scene)
        if e.op == "+":
            return lhs + rhs
        if e.op == "-":
            return lhs - rhs
        if e.op == "*":
            return lhs * rhs
        if rhs == 0.0:
            raise DivisionByZero(f"division by zero: {format_expr(e)}")
        return lhs / rhs
    if isinstance(e, Call):
        values = [evaluate(a, env, scene) for a in e.args]
        if e.fn == "sqrt":
            return math.sqrt(values[0]) if values[0] >= 0.0 else float("nan")
        if e.fn in UNARY_FUNCS:
            return float(UNARY_FUNCS[e.fn](values[0]))
        return float(BINARY_FUNCS[e.fn](values[0], values[1]))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_actions(t: PlanTemplate, env: Env, scene: SceneState) -> ActionSequence:
    """Evaluate every action argument under a named-parameter environment."""
    out: list[PlanAction] = []
    for action in t.actions:
        args: list[Union[float, str]] = []
        for arg in action.args:
            if isinstance(arg, str):
                args.append(arg)
            else:
                args.append(evaluate(arg, env, scene))
        out.append(PlanAction(action.name, tuple(args)))
    return tuple(out)


def instantiate(t: PlanTemplate, alpha_c: Sequence[float], scene: SceneState) -> ActionSequence:
    """Bind a flat parameter vector and evaluate all action arguments.

    Raises ArityMismatch when len(alpha_c) differs from the template's
    flattened parameter count.
    """
    env = t.bind(alpha_c)
    return evaluate_actions(t, env, scene)
