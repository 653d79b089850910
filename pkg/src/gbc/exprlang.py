"""Expression language for metric components and perturbation fields.

Grammar (see README for the full EBNF):

    expr   := term { ("+" | "-") term }
    term   := factor { ("*" | "/") factor }
    factor := "-" factor | power
    power  := atom [ "^" factor ]     # exponent must fold to a constant
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

Functions: sin, cos, exp, ln, sqrt, tanh.  Angles are in radians; there is
no implicit multiplication.  Exponents are restricted to constant literal
subtrees so jet evaluation never needs variable-exponent logic.

Evaluation binds variable names to jets (for derivatives), plain floats or
``(N,)`` arrays (values only).  Parameters are ordinary names bound to
constants at evaluation time, so a parsed family of metrics is evaluated
for any parameter value without re-parsing.
"""

import operator
import re
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import EvalError, ExprError, GbcError

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[+\-*/^(),])
    """,
    re.VERBOSE,
)

_FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "tanh")


@dataclass(frozen=True)
class Token:
    kind: str          # number | ident | op | end
    text: str
    value: float | None
    pos: int


def tokenize(src):
    """Split source text into tokens; raises ExprError on illegal input."""
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprError(f"illegal character {src[pos]!r}", pos, src)
        if m.lastgroup == "ws":
            pos = m.end()
            continue
        text = m.group()
        if m.lastgroup == "number":
            tokens.append(Token("number", text, float(text), pos))
        elif m.lastgroup == "ident":
            tokens.append(Token("ident", text, None, pos))
        else:
            tokens.append(Token("op", text, None, pos))
        pos = m.end()
    tokens.append(Token("end", "", None, len(src)))
    return tokens


@dataclass(frozen=True)
class ExprNode:
    """AST node.

    kind/payload pairs:
      constant -> float value
      variable -> name
      unary    -> "-"
      binary   -> one of "+", "-", "*", "/", "^"
      call     -> function name
    """

    kind: str
    payload: object
    children: tuple = ()
    pos: int = field(default=-1, compare=False)

    def variables(self):
        """Set of variable names appearing in the tree."""
        out = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if node.kind == "variable":
                out.add(node.payload)
            stack.extend(node.children)
        return out


def const(x, pos=-1):
    return ExprNode("constant", float(x), (), pos)


def var(name, pos=-1):
    return ExprNode("variable", name, (), pos)


class _Parser:
    def __init__(self, tokens, src):
        self.tokens = tokens
        self.src = src
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text):
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.advance()
        raise ExprError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                        tok.pos, self.src)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprError(f"unexpected token {tok.text!r}", tok.pos, self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance()
            node = ExprNode("binary", op.text, (node, self.term()), op.pos)
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance()
            node = ExprNode("binary", op.text, (node, self.factor()), op.pos)
        return node

    def factor(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return ExprNode("unary", "-", (self.factor(),), tok.pos)
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            exponent = self.factor()
            value = _fold_constant(exponent, self.src)
            return ExprNode("binary", "^", (base, const(value, exponent.pos)), tok.pos)
        return base

    def atom(self):
        tok = self.advance()
        if tok.kind == "number":
            return const(tok.value, tok.pos)
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in _FUNCTIONS:
                    raise ExprError(f"unknown function {tok.text!r}", tok.pos, self.src)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return ExprNode("call", tok.text, (arg,), tok.pos)
            return var(tok.text, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if tok.kind == "end":
            raise ExprError("unexpected end of input", tok.pos, self.src)
        raise ExprError(f"unexpected token {tok.text!r}", tok.pos, self.src)


def _fold_constant(node, src):
    """Exponents must be built from literals only (no variables)."""
    if node.variables():
        raise ExprError("exponent must be a constant expression",
                        node.pos, src)
    return eval_expr(node, {})


def parse_tokens(tokens, src=""):
    if not tokens or tokens[0].kind == "end":
        raise ExprError("empty expression", 0, src)
    return _Parser(tokens, src).parse()


def parse(src):
    """Tokenize and parse source text into an ExprNode."""
    return parse_tokens(tokenize(src), src)


def validate_names(node, allowed):
    """Reject variables outside the declared coordinate/parameter names."""
    allowed = set(allowed)
    stack = [node]
    while stack:
        n = stack.pop()
        if n.kind == "variable" and n.payload not in allowed:
            raise ExprError(f"unknown name {n.payload!r}", max(n.pos, 0))
        stack.extend(n.children)


_BINARY_OPS = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
}


def eval_expr(node, bindings):
    """Evaluate over jets and/or plain values.

    Every variable must be bound; parameters are bound to plain constants.
    Domain violations are re-raised as EvalError with the source position
    of the offending subexpression attached.
    """
    kind = node.kind
    if kind == "constant":
        return node.payload
    if kind == "variable":
        try:
            return bindings[node.payload]
        except KeyError:
            raise EvalError(f"unbound variable {node.payload!r}",
                            position=max(node.pos, 0)) from None
    if kind == "unary":
        return -eval_expr(node.children[0], bindings)
    try:
        if kind == "binary":
            a = eval_expr(node.children[0], bindings)
            b = eval_expr(node.children[1], bindings)
            if node.payload == "^":
                return jets.pow_const(a, b)
            return _BINARY_OPS[node.payload](a, b)
        if kind == "call":
            arg = eval_expr(node.children[0], bindings)
            return jets.UNARY_FUNCS[node.payload](arg)
    except EvalError:
        raise
    except GbcError as exc:
        raise EvalError(str(exc), position=max(node.pos, 0)) from exc
    raise ValueError(f"malformed node kind {kind!r}")


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "unary": 3, "^": 4, "atom": 5}


def _prec(node):
    if node.kind in ("constant", "variable", "call"):
        # negative literals print with a leading minus and bind like unary
        if node.kind == "constant" and node.payload < 0:
            return _PRECEDENCE["unary"]
        return _PRECEDENCE["atom"]
    if node.kind == "unary":
        return _PRECEDENCE["unary"]
    return _PRECEDENCE[node.payload]


def to_source(node):
    """Render an AST back to parseable source (round-trip stable)."""
    kind = node.kind
    if kind == "constant":
        return repr(node.payload)
    if kind == "variable":
        return node.payload
    if kind == "call":
        return f"{node.payload}({to_source(node.children[0])})"
    if kind == "unary":
        child = node.children[0]
        body = to_source(child)
        if _prec(child) < _PRECEDENCE["unary"]:
            body = f"({body})"
        return f"-{body}"
    left, right = node.children
    op = node.payload
    lsrc = to_source(left)
    rsrc = to_source(right)
    myprec = _PRECEDENCE[op]
    if op == "^":
        # base must be an atom; exponent is a constant
        if _prec(left) < _PRECEDENCE["atom"]:
            lsrc = f"({lsrc})"
        if _prec(right) < _PRECEDENCE["atom"]:
            rsrc = f"({rsrc})"
        return f"{lsrc}^{rsrc}"
    if _prec(left) < myprec:
        lsrc = f"({lsrc})"
    # -, / are left-associative: right child needs parens at equal precedence
    if _prec(right) < myprec or (_prec(right) == myprec and op in ("-", "/")):
        rsrc = f"({rsrc})"
    return f"{lsrc} {op} {rsrc}"


def rename_variables(node, mapping):
    """Rebuild the tree with variable names substituted (for product charts)."""
    if node.kind == "variable":
        new = mapping.get(node.payload, node.payload)
        return ExprNode("variable", new, (), node.pos)
    if not node.children:
        return node
    children = tuple(rename_variables(c, mapping) for c in node.children)
    return ExprNode(node.kind, node.payload, children, node.pos)


def substitute(node, mapping):
    """Replace variables by whole subtrees (for chart reparametrizations)."""
    if node.kind == "variable" and node.payload in mapping:
        return mapping[node.payload]
    if not node.children:
        return node
    children = tuple(substitute(c, mapping) for c in node.children)
    return ExprNode(node.kind, node.payload, children, node.pos)
