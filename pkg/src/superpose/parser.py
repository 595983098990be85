"""Text format for Lagrangians.

Example::

    # free scalar field
    param m;
    field phi: scalar;
    term 1/2 * d[^mu](phi) * d[mu](phi);
    term -1/2 * m^2 * phi^2;

Declarations are ``field NAME: KIND [SIG];``, ``group NAME dim N;``,
``param NAME, ...;`` and ``tensor NAME: [SIG] (antisymmetric|symmetric)?;``.
A signature lists ``lorentz``, ``spinor``, ``flavor`` or ``adjoint(GROUP)``.
Inside terms, ``d[mu](x)`` is a lower-index derivative and ``d[^mu](x)`` an
upper one; ``bar(x)`` conjugates; ``gamma[mu]``, ``f[a,b,c]`` and
``metric[mu,nu]`` are built-in tensors; ``i`` is the imaginary unit.
Factors may be joined with ``*`` or juxtaposed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .symbolic import (
    ADJOINT,
    LORENTZ,
    LOWER,
    UPPER,
    Add,
    Declarations,
    FieldDecl,
    FieldRef,
    GroupDecl,
    I,
    Index,
    Lagrangian,
    Monomial,
    Mul,
    Num,
    Param,
    Polynomial,
    Pow,
    Slot,
    SymbolicError,
    TensorDecl,
    TensorSymbol,
    normalize,
)

MAX_EXPONENT = 32
MAX_DEPTH = 64

KEYWORDS = frozenset(
    {
        "field", "group", "param", "tensor", "term", "dim",
        "scalar", "spinor", "vector", "lorentz", "adjoint", "flavor",
        "antisymmetric", "symmetric",
        "d", "bar", "gamma", "f", "metric", "i",
    }
)

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\f\v]+)"
    r"|(?P<nl>\n)"
    r"|(?P<comment>\#[^\n]*)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*'*)"
    r"|(?P<int>[0-9]+)"
    r"|(?P<op>[\[\]\(\),:;+\-*/^])"
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(ValueError):
    """Raised for any input that does not describe a valid Lagrangian."""

    KINDS = ("syntax", "undeclared-field", "index-arity", "free-index")

    def __init__(self, span: SourceSpan, message: str, kind: str = "syntax"):
        if kind not in self.KINDS:
            kind = "syntax"
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message or "invalid input"
        self.kind = kind


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    span: SourceSpan


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(SourceSpan(line, col), f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        chunk = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("name", "int", "op"):
                tokens.append(Token(kind, chunk, SourceSpan(line, col, len(chunk))))
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(line, col, 0)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.fields: list[FieldDecl] = []
        self.groups: list[GroupDecl] = []
        self.params: list[str] = []
        self.tensors: list[TensorDecl] = []
        self.terms: list = []
        self.depth = 0

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, text: str) -> bool:
        return self.tok.type in ("name", "op") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        if tok.type != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe()}")
        return self.advance()

    def describe(self) -> str:
        return "end of input" if self.tok.type == "eof" else repr(self.tok.text)

    def fail(self, message: str, kind: str = "syntax", span: SourceSpan | None = None):
        raise ParseError(span or self.tok.span, message, kind)

    def name(self, what: str = "name") -> Token:
        if self.tok.type != "name":
            self.fail(f"expected {what}, found {self.describe()}")
        return self.advance()

    def new_name(self, what: str) -> str:
        tok = self.name(what)
        if tok.text in KEYWORDS:
            self.fail(f"{tok.text!r} is reserved", span=tok.span)
        if tok.text in self.declared_names():
            self.fail(f"{tok.text!r} is already declared", span=tok.span)
        return tok.text

    def integer(self) -> int:
        if self.tok.type != "int":
            self.fail(f"expected integer, found {self.describe()}")
        return int(self.advance().text)

    def declared_names(self) -> set[str]:
        return (
            {f.name for f in self.fields}
            | {g.name for g in self.groups}
            | set(self.params)
            | {t.name for t in self.tensors}
        )

    def decls(self) -> Declarations:
        return Declarations(tuple(self.fields), tuple(self.groups), tuple(self.params), tuple(self.tensors))

    # -- file structure ---------------------------------------------------

    def parse(self) -> Lagrangian:
        while self.tok.type != "eof":
            if self.at("field"):
                self.field_decl()
            elif self.at("group"):
                self.group_decl()
            elif self.at("param"):
                self.param_decl()
            elif self.at("tensor"):
                self.tensor_decl()
            elif self.at("term"):
                self.term()
            else:
                self.fail(f"expected a declaration or 'term', found {self.describe()}")
        decls = self.decls()
        try:
            return normalize(Add(tuple(self.terms)), decls)
        except SymbolicError as err:  # pragma: no cover - terms are checked one by one
            self.fail(str(err), err.kind, SourceSpan(1, 1))

    def field_decl(self):
        self.advance()
        name = self.new_name("field name")
        self.expect(":")
        kind_tok = self.name("field kind")
        if kind_tok.text not in ("scalar", "spinor", "vector"):
            self.fail(f"unknown field kind {kind_tok.text!r}", span=kind_tok.span)
        sig = self.signature() if self.at("[") else ()
        self.expect(";")
        self.fields.append(FieldDecl(name, kind_tok.text, sig))

    def group_decl(self):
        self.advance()
        name = self.new_name("group name")
        self.expect("dim")
        tok = self.tok
        dim = self.integer()
        if dim < 1:
            self.fail("group dimension must be positive", span=tok.span)
        self.expect(";")
        self.groups.append(GroupDecl(name, dim))

    def param_decl(self):
        self.advance()
        self.params.append(self.new_name("parameter name"))
        while self.at(","):
            self.advance()
            self.params.append(self.new_name("parameter name"))
        self.expect(";")

    def tensor_decl(self):
        self.advance()
        name = self.new_name("tensor name")
        self.expect(":")
        sig = self.signature()
        symmetry = "none"
        if self.at("antisymmetric") or self.at("symmetric"):
            symmetry = self.advance().text
        self.expect(";")
        self.tensors.append(TensorDecl(name, sig, symmetry))

    def signature(self) -> tuple:
        self.expect("[")
        slots = [self.slot()]
        while self.at(","):
            self.advance()
            slots.append(self.slot())
        self.expect("]")
        return tuple(slots)

    def slot(self) -> Slot:
        tok = self.name("index kind")
        if tok.text in ("lorentz", "spinor", "flavor"):
            return Slot(tok.text)
        if tok.text == "adjoint":
            self.expect("(")
            g = self.name("group name")
            if g.text not in {x.name for x in self.groups}:
                self.fail(f"undeclared group {g.text!r}", "undeclared-field", g.span)
            self.expect(")")
            return Slot(ADJOINT, g.text)
        self.fail(f"unknown index kind {tok.text!r}", span=tok.span)

    # -- terms ------------------------------------------------------------

    def term(self):
        start = self.advance().span
        expr = self.expr()
        end = self.expect(";").span
        span = SourceSpan(start.line, start.column, _span_length(start, end))
        decls = self.decls()
        try:
            normalize(expr, decls)
        except SymbolicError as err:
            self.fail(str(err), err.kind, span)
        self.terms.append(expr)

    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")
        sign = 1
        if self.at("+") or self.at("-"):
            sign = -1 if self.advance().text == "-" else 1
        first = self.product()
        terms = [first if sign > 0 else Mul((Num(Fraction(-1)), first))]
        while self.at("+") or self.at("-"):
            op = self.advance().text
            p = self.product()
            terms.append(p if op == "+" else Mul((Num(Fraction(-1)), p)))
        self.depth -= 1
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def starts_atom(self) -> bool:
        tok = self.tok
        if tok.type in ("int", "name"):
            return tok.type == "int" or tok.text not in KEYWORDS or tok.text in (
                "d", "bar", "gamma", "f", "metric", "i",
            )
        return tok.text == "("

    def product(self):
        factors = [self.power()]
        while True:
            if self.at("*"):
                self.advance()
                factors.append(self.power())
            elif self.starts_atom():
                factors.append(self.power())
            else:
                break
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def power(self):
        base = self.atom()
        if self.at("^"):
            self.advance()
            tok = self.tok
            exp = self.integer()
            if exp > MAX_EXPONENT:
                self.fail(f"exponent larger than {MAX_EXPONENT}", span=tok.span)
            return Pow(base, exp)
        return base

    def atom(self):
        tok = self.tok
        if tok.type == "int":
            self.advance()
            value = Fraction(int(tok.text))
            if self.at("/"):
                self.advance()
                den_tok = self.tok
                den = self.integer()
                if den == 0:
                    self.fail("division by zero", span=den_tok.span)
                value /= den
            return Num(value)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.type != "name":
            self.fail(f"expected a factor, found {self.describe()}")
        if tok.text == "i":
            self.advance()
            return I
        if tok.text in ("d", "bar"):
            return self.field_expr()
        if tok.text == "gamma":
            self.advance()
            (mu,) = self.index_list(1, [LORENTZ], tok)
            return TensorSymbol("gamma", (mu,))
        if tok.text == "f":
            self.advance()
            idx = self.index_list(3, [ADJOINT] * 3, tok)
            return TensorSymbol("f", tuple(idx), "antisymmetric")
        if tok.text == "metric":
            self.advance()
            idx = self.index_list(2, [LORENTZ] * 2, tok)
            return TensorSymbol("metric", tuple(idx), "symmetric")
        if tok.text in KEYWORDS:
            self.fail(f"unexpected keyword {tok.text!r}")
        if tok.text in self.params:
            self.advance()
            return Param(tok.text)
        tensor = next((t for t in self.tensors if t.name == tok.text), None)
        if tensor is not None:
            self.advance()
            idx = self.index_list(len(tensor.signature), tensor.signature, tok)
            return TensorSymbol(tensor.name, tuple(idx), tensor.symmetry)
        return self.field_expr()

    def field_expr(self) -> FieldRef:
        tok = self.tok
        if self.at("d"):
            self.advance()
            self.expect("[")
            mu = self.index(LORENTZ)
            self.expect("]")
            inner = self.wrapped_field()
            return inner.d(mu)
        if self.at("bar"):
            self.advance()
            inner = self.wrapped_field()
            if inner.conjugated:
                self.fail("field conjugated twice", span=tok.span)
            return inner.bar()
        name = self.name("field name")
        decl = next((f for f in self.fields if f.name == name.text), None)
        if decl is None:
            kind = "syntax" if name.text in KEYWORDS else "undeclared-field"
            self.fail(f"undeclared name {name.text!r}", kind, name.span)
        if decl.signature or self.at("["):
            idx = self.index_list(len(decl.signature), decl.signature, name)
        else:
            idx = []
        return FieldRef(decl.name, False, tuple(idx), (), decl.kind)

    def wrapped_field(self) -> FieldRef:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")
        self.expect("(")
        inner = self.field_expr()
        self.expect(")")
        self.depth -= 1
        return inner

    def index_list(self, arity: int, kinds, owner: Token) -> list[Index]:
        if not self.at("["):
            self.fail(f"{owner.text!r} needs {arity} indices", "index-arity", owner.span)
        self.advance()
        idx = []
        while True:
            if len(idx) >= arity:
                self.fail(f"{owner.text!r} takes {arity} indices", "index-arity", owner.span)
            slot = kinds[len(idx)]
            if isinstance(slot, Slot):
                idx.append(self.index(slot.kind, slot.group))
            else:
                idx.append(self.index(slot))
            if self.at(","):
                self.advance()
                continue
            break
        self.expect("]")
        if len(idx) != arity:
            self.fail(f"{owner.text!r} takes {arity} indices, got {len(idx)}", "index-arity", owner.span)
        return idx

    def index(self, kind: str, group: str | None = None) -> Index:
        position = LOWER
        if self.at("^"):
            self.advance()
            position = UPPER
        tok = self.tok
        if tok.type == "int":
            if kind == LORENTZ:
                self.fail("Lorentz indices must be symbolic")
            self.advance()
            if int(tok.text) < 1:
                self.fail("component values start at 1", span=tok.span)
            return Index(str(int(tok.text)), kind, LOWER, group)
        name = self.name("index name")
        if name.text in KEYWORDS - {"i", "d", "f"}:
            self.fail(f"{name.text!r} is reserved", span=name.span)
        return Index(name.text, kind, position, group)


def _span_length(start: SourceSpan, end: SourceSpan) -> int:
    if start.line == end.line:
        return end.column + end.length - start.column
    return 1


def parse_lagrangian(text: str | bytes) -> Lagrangian:
    """Parse DSL text into a normalized :class:`Lagrangian`.

    Raises :class:`ParseError` (and nothing else) for invalid input.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as err:
            raise ParseError(SourceSpan(1, err.start + 1), "input is not valid UTF-8") from None
    parser = _Parser(text)
    try:
        return parser.parse()
    except RecursionError:
        raise ParseError(parser.tok.span, "expression nested too deeply") from None


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_index(idx: Index) -> str:
    return ("^" if idx.kind == LORENTZ and idx.position == UPPER else "") + idx.name


def render_factor(f) -> str:
    if isinstance(f, TensorSymbol):
        return f"{f.name}[{','.join(render_index(i) for i in f.indices)}]"
    out = f.name
    if f.indices:
        out += f"[{','.join(render_index(i) for i in f.indices)}]"
    if f.conjugated:
        out = f"bar({out})"
    for d in reversed(f.derivatives):
        out = f"d[{render_index(d)}]({out})"
    return out


def _factor_parts(m: Monomial) -> list[str]:
    parts = [name if exp == 1 else f"{name}^{exp}" for name, exp in m.symbols]
    factors = list(m.factors)
    k = 0
    while k < len(factors):
        f = factors[k]
        run = 1
        bare = isinstance(f, FieldRef) and not f.indices and not f.derivatives and not f.conjugated
        while bare and k + run < len(factors) and factors[k + run] == f:
            run += 1
        text = render_factor(f)
        parts.append(text if run == 1 else f"{text}^{run}")
        k += run
    return parts


def render_monomial(m: Monomial) -> str:
    parts = _factor_parts(m)
    c = abs(m.coeff)
    head = []
    if c != 1 or (not parts and not m.ipow):
        head.append(str(c))
    if m.ipow:
        head.append("i")
    text = " * ".join(head + parts)
    return ("-" if m.coeff < 0 else "") + text


def render_polynomial(p: Polynomial | tuple) -> str:
    terms = list(p)
    if not terms:
        return "0"
    out = render_monomial(terms[0])
    for m in terms[1:]:
        text = render_monomial(m)
        out += f" - {text[1:]}" if text.startswith("-") else f" + {text}"
    return out


def _render_slot(s: Slot) -> str:
    return f"adjoint({s.group})" if s.kind == ADJOINT else s.kind


def render(L: Lagrangian) -> str:
    """Deterministic text form; ``parse_lagrangian(render(L)) == L``."""
    d = L.declarations
    lines = []
    for g in d.groups:
        lines.append(f"group {g.name} dim {g.dim};")
    if d.params:
        lines.append(f"param {', '.join(d.params)};")
    for t in d.tensors:
        sig = ", ".join(_render_slot(s) for s in t.signature)
        sym = "" if t.symmetry == "none" else f" {t.symmetry}"
        lines.append(f"tensor {t.name}: [{sig}]{sym};")
    for fd in d.fields:
        sig = f" [{', '.join(_render_slot(s) for s in fd.signature)}]" if fd.signature else ""
        lines.append(f"field {fd.name}: {fd.kind}{sig};")
    for m in L.terms:
        lines.append(f"term {render_monomial(m)};")
    return "\n".join(lines) + "\n"
