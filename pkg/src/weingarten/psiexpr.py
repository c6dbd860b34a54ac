"""A small arithmetic language for user-supplied psi(t, x, nu_t) and phi(t).

Grammar (``^`` is right-associative and binds tighter than unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are ``t``, ``x1``, ``x2``, ..., ``nu_t`` and the constants ``pi``, ``e``.
Evaluation is vectorized over numpy arrays.
"""

import re
from dataclasses import dataclass

import numpy as np

from weingarten.errors import WeingartenError


class PsiSyntaxError(WeingartenError, SyntaxError):
    def __init__(self, message, source, pos):
        super().__init__(f"{message} at position {pos}")
        self.msg_only = message
        self.source = source
        self.pos = pos

    def caret(self):
        return f"{self.source}\n{' ' * self.pos}^ {self.msg_only}"


class PsiNameError(WeingartenError, NameError):
    pass


class PsiDomainError(WeingartenError, ArithmeticError):
    pass


def _cot(x):
    return 1.0 / np.tan(x)


FUNCTIONS = {
    "sin": (np.sin, 1), "cos": (np.cos, 1), "tan": (np.tan, 1), "cot": (_cot, 1),
    "exp": (np.exp, 1), "log": (np.log, 1), "sinh": (np.sinh, 1), "cosh": (np.cosh, 1),
    "tanh": (np.tanh, 1), "sqrt": (np.sqrt, 1), "abs": (np.abs, 1), "pow": (np.power, 2),
}
CONSTANTS = {"pi": np.pi, "e": np.e}
_VAR_RE = re.compile(r"^(t|nu_t|x[1-9][0-9]*)$")

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


# AST nodes -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, env):
        return self.value

    def source(self):
        return repr(self.value) if self.value >= 0 else f"({self.value!r})"


@dataclass(frozen=True)
class Var:
    name: str

    def eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise PsiNameError(f"unbound variable {self.name!r}") from None

    def source(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: object

    def eval(self, env):
        return -self.operand.eval(env)

    def source(self):
        return f"(-{self.operand.source()})"


_BINOPS = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def eval(self, env):
        return _BINOPS[self.op](self.left.eval(env), self.right.eval(env))

    def source(self):
        return f"({self.left.source()} {self.op} {self.right.source()})"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def eval(self, env):
        fn = FUNCTIONS[self.name][0]
        return fn(*(a.eval(env) for a in self.args))

    def source(self):
        return f"{self.name}({', '.join(a.source() for a in self.args)})"


# parser ----------------------------------------------------------------------

def _tokenize(src):
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise PsiSyntaxError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0
        self.names = set()

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.take()
        if val != text:
            found = "end of input" if kind == "end" else repr(val)
            raise PsiSyntaxError(f"expected {text!r}, found {found}", self.src, pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise PsiSyntaxError(f"unexpected {val!r}", self.src, pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            operand = self.unary()
            return Neg(operand) if val == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise PsiNameError(f"unknown function {val!r} at position {pos}")
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[val][1]
                if len(args) != arity:
                    raise PsiSyntaxError(
                        f"{val} takes {arity} argument(s), got {len(args)}", self.src, pos)
                return Call(val, tuple(args))
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if _VAR_RE.match(val):
                self.names.add(val)
                return Var(val)
            raise PsiNameError(f"unknown identifier {val!r} at position {pos}")
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise PsiSyntaxError(f"unexpected {found}", self.src, pos)


@dataclass(frozen=True)
class PsiSpec:
    """Parsed expression. ``free_vars`` lists the variables it reads."""

    source: str
    ast: object
    free_vars: frozenset

    def evaluate(self, bindings=None, **kw):
        env = dict(bindings or {}, **kw)
        missing = self.free_vars - env.keys()
        if missing:
            raise PsiNameError(f"unbound variable(s): {', '.join(sorted(missing))}")
        with np.errstate(all="ignore"):
            out = np.asarray(self.ast.eval(env), dtype=float)
        if not np.all(np.isfinite(out)):
            raise PsiDomainError(f"non-finite value evaluating {self.source!r}")
        if out.ndim == 0:
            return float(out)
        return out

    __call__ = evaluate

    def to_source(self):
        return self.ast.source()

    def depends_on(self, var):
        return var in self.free_vars


def parse(source):
    """Parse ``source`` into a :class:`PsiSpec`."""
    if not isinstance(source, str) or not source.strip():
        raise PsiSyntaxError("empty expression", str(source), 0)
    p = _Parser(source)
    ast = p.parse()
    return PsiSpec(source, ast, frozenset(p.names))


def evaluate(spec, bindings):
    return spec.evaluate(bindings)


def _step(x):
    return 1e-6 * (1.0 + np.abs(x))


def partial(spec, var, bindings):
    """d spec / d var by a central difference, Richardson-extrapolated once."""
    if var not in spec.free_vars:
        if not _VAR_RE.match(var):
            raise PsiNameError(f"{var!r} is not a variable")
        return 0.0 if np.ndim(bindings.get(var, 0.0)) == 0 else np.zeros_like(bindings[var], dtype=float)
    x = np.asarray(bindings[var], dtype=float)
    h = _step(x)

    def central(step):
        up = dict(bindings, **{var: x + step})
        dn = dict(bindings, **{var: x - step})
        return (np.asarray(spec.evaluate(up)) - np.asarray(spec.evaluate(dn))) / (2.0 * step)

    d = (4.0 * central(h / 2.0) - central(h)) / 3.0
    return float(d) if d.ndim == 0 else d


def second_partial(spec, var, bindings):
    """d^2 spec / d var^2 by a central second difference, Richardson-extrapolated once."""
    if var not in spec.free_vars:
        return 0.0
    x = np.asarray(bindings[var], dtype=float)
    h = 1e-4 * (1.0 + np.abs(x))
    f0 = np.asarray(spec.evaluate(bindings))

    def second(step):
        up = np.asarray(spec.evaluate(dict(bindings, **{var: x + step})))
        dn = np.asarray(spec.evaluate(dict(bindings, **{var: x - step})))
        return (up - 2.0 * f0 + dn) / (step * step)

    d = (4.0 * second(h / 2.0) - second(h)) / 3.0
    return float(d) if d.ndim == 0 else d
