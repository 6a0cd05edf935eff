"""Exact arithmetic layer.

Sparse multivariate polynomials over Q, localized elements (a polynomial
numerator over a monomial-in-designated-units denominator), chart contexts,
transport of localized elements between contexts, and dense little matrices
over localized elements.

Everything is exact: coefficients are `fractions.Fraction`, all comparisons are
symbolic identities (cross-multiplication), and no tolerance appears anywhere.

Conventions
-----------
* A *context* records where an element lives: the ambient space, the set of
  chart indices whose intersection we are working on, the *home* chart whose
  affine coordinates are used for numerators, and the designated units that
  may appear in denominators.
* On the projective chart ``home = h`` of P^n the variables are the
  dehomogenized coordinates ``x_k`` for ``k != h`` (meaning ``x_k / x_h``).
  On affine n-space the variables are ``x_1 .. x_n`` and there is a single
  chart, index 0.
* Designated units carry string keys: ``"c<k>"`` is the coordinate unit
  ``x_k / x_home`` (available when chart ``k`` belongs to the context) and
  ``"s<c>"`` is the registered section unit of chart ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionViolated

Exps = tuple  # exponent vector, one entry per context variable


def grevlex_key(exps):
    """Sort key realizing graded reverse lexicographic order (max = leading)."""
    return (sum(exps), tuple(-e for e in reversed(exps)))


class Poly:
    """Sparse polynomial with Fraction coefficients and a fixed variable count.

    Terms map exponent tuples (length == arity) to nonzero Fractions.  The
    zero polynomial has an empty term dict.  Instances are treated as
    immutable; all operations return new objects.
    """

    __slots__ = ("arity", "terms", "_hash")

    def __init__(self, arity, terms=None):
        self.arity = arity
        clean = {}
        if terms:
            for exps, coeff in terms.items():
                if len(exps) != arity:
                    raise ValueError(f"term arity {len(exps)} != {arity}")
                coeff = Fraction(coeff)
                if coeff:
                    clean[tuple(exps)] = coeff
        self.terms = clean
        self._hash = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, arity):
        return cls(arity, {})

    @classmethod
    def const(cls, arity, value):
        return cls(arity, {(0,) * arity: Fraction(value)})

    @classmethod
    def variable(cls, arity, index):
        exps = [0] * arity
        exps[index] = 1
        return cls(arity, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, arity, exps, coeff=1):
        return cls(arity, {tuple(exps): Fraction(coeff)})

    # -- predicates and views ---------------------------------------------

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return not self.terms or set(self.terms) == {(0,) * self.arity}

    def constant_value(self):
        if not self.terms:
            return Fraction(0)
        if not self.is_constant():
            raise ValueError("not a constant polynomial")
        return self.terms[(0,) * self.arity]

    def is_monomial(self):
        return len(self.terms) == 1

    def total_degree(self):
        """Max term degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def leading(self):
        """(exponents, coefficient) of the grevlex-leading term."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exps = max(self.terms, key=grevlex_key)
        return exps, self.terms[exps]

    def sorted_terms(self):
        """Terms in descending grevlex order (canonical print order)."""
        return [(e, self.terms[e]) for e in
                sorted(self.terms, key=grevlex_key, reverse=True)]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        self._chk(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, Fraction(0)) + c
            if s:
                terms[e] = s
            else:
                terms.pop(e, None)
        return Poly(self.arity, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Poly(self.arity, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._chk(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = terms.get(e, Fraction(0)) + c1 * c2
                if s:
                    terms[e] = s
                else:
                    del terms[e]
        return Poly(self.arity, terms)

    __rmul__ = __mul__

    def scale(self, c):
        c = Fraction(c)
        if not c:
            return Poly.zero(self.arity)
        return Poly(self.arity, {e: c * v for e, v in self.terms.items()})

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(self.arity, 1)
        for _ in range(n):
            out = out * self
        return out

    def evaluate(self, point):
        if len(point) != self.arity:
            raise ValueError("point arity mismatch")
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                v *= Fraction(x) ** k
            total += v
        return total

    def _chk(self, other):
        if not isinstance(other, Poly) or other.arity != self.arity:
            raise TypeError("polynomial arity mismatch")

    # -- identity ----------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Poly) and self.arity == other.arity
                and self.terms == other.terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.arity, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"Poly({self.arity}, {format_poly(self)})"


def divide_exact(p, q):
    """Exact multivariate division: p / q as a Poly, or None if not exact.

    Ordinary grevlex long division that insists on a zero remainder.  Fast
    path for monomial divisors.
    """
    if q.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    if p.is_zero():
        return Poly.zero(p.arity)
    if q.is_monomial():
        (qe, qc), = q.terms.items()
        out = {}
        for e, c in p.terms.items():
            d = tuple(a - b for a, b in zip(e, qe))
            if any(x < 0 for x in d):
                return None
            out[d] = c / qc
        return Poly(p.arity, out)
    qe, qc = q.leading()
    rem = p
    quot = Poly.zero(p.arity)
    while not rem.is_zero():
        re, rc = rem.leading()
        d = tuple(a - b for a, b in zip(re, qe))
        if any(x < 0 for x in d):
            return None
        t = Poly.monomial(p.arity, d, rc / qc)
        quot = quot + t
        rem = rem - t * q
    return quot


# -- printing and parsing ---------------------------------------------------

def default_names(arity):
    return tuple(f"x{i}" for i in range(arity))


def format_poly(p, names=None):
    """Canonical string: terms in descending grevlex, '^' powers, '*' products."""
    names = names or default_names(p.arity)
    if p.is_zero():
        return "0"
    parts = []
    for exps, coeff in p.sorted_terms():
        mono = "*".join(
            f"{names[i]}^{e}" if e > 1 else names[i]
            for i, e in enumerate(exps) if e
        )
        mag = abs(coeff)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not parts:
            parts.append(body if coeff > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if coeff > 0 else f"- {body}")
    return " ".join(parts)


class _Tok:
    def __init__(self, text):
        self.toks = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                self.toks.append(("int", text[i:j]))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.toks.append(("name", text[i:j]))
                i = j
            elif ch in "+-*^()/":
                self.toks.append((ch, ch))
                i += 1
            else:
                raise ValueError(f"unexpected character {ch!r} in polynomial")
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok


def parse_poly(text, names):
    """Parse '+ - * ^ ( )' polynomial syntax over the given variable names.

    Integer and a/b rational literals are allowed; '/' is only permitted
    between integer literals.  Implicit multiplication is not supported.
    """
    arity = len(names)
    index = {n: i for i, n in enumerate(names)}
    tk = _Tok(str(text))

    def parse_expr():
        sign = 1
        kind, _ = tk.peek()
        if kind in ("+", "-"):
            tk.next()
            sign = -1 if kind == "-" else 1
        node = parse_term().scale(sign)
        while True:
            kind, _ = tk.peek()
            if kind == "+":
                tk.next()
                node = node + parse_term()
            elif kind == "-":
                tk.next()
                node = node - parse_term()
            else:
                return node

    def parse_term():
        node = parse_factor()
        while tk.peek()[0] == "*":
            tk.next()
            node = node * parse_factor()
        return node

    def parse_factor():
        base = parse_base()
        if tk.peek()[0] == "^":
            tk.next()
            kind, val = tk.next()
            if kind != "int":
                raise ValueError("exponent must be an integer literal")
            return base ** int(val)
        return base

    def parse_base():
        kind, val = tk.next()
        if kind == "(":
            node = parse_expr()
            if tk.next()[0] != ")":
                raise ValueError("unbalanced parenthesis")
            return node
        if kind == "-":
            return -parse_base()
        if kind == "int":
            num = int(val)
            if tk.peek()[0] == "/":
                tk.next()
                kind2, val2 = tk.next()
                if kind2 != "int":
                    raise ValueError("'/' only between integer literals")
                return Poly.const(arity, Fraction(num, int(val2)))
            return Poly.const(arity, num)
        if kind == "name":
            if val not in index:
                raise ValueError(f"unknown variable {val!r} (have {names})")
            return Poly.variable(arity, index[val])
        raise ValueError("malformed polynomial expression")

    out = parse_expr()
    if tk.peek()[0] is not None:
        raise ValueError(f"trailing input in polynomial: {text!r}")
    return out


# -- homogenization ----------------------------------------------------------

def homogenize(p, home, dim):
    """Chart polynomial -> (homogeneous form in dim+1 variables, its degree).

    Chart variables are the coordinates x_k (k != home) in increasing k; the
    missing degree on each term is absorbed by x_home.
    """
    axes = [k for k in range(dim + 1) if k != home]
    if p.arity != dim:
        raise ValueError("chart polynomial arity mismatch")
    deg = max(p.total_degree(), 0)
    terms = {}
    for e, c in p.terms.items():
        full = [0] * (dim + 1)
        for pos, k in enumerate(axes):
            full[k] = e[pos]
        full[home] = deg - sum(e)
        terms[tuple(full)] = c
    return Poly(dim + 1, terms), deg


def dehomogenize(form, home):
    """Set x_home = 1 in a form of P^n, yielding a chart-home polynomial."""
    n1 = form.arity
    terms = {}
    for e, c in form.terms.items():
        chart = tuple(e[k] for k in range(n1) if k != home)
        terms[chart] = terms.get(chart, Fraction(0)) + c
    return Poly(n1 - 1, terms)


def is_homogeneous(form):
    degs = {sum(e) for e in form.terms}
    return len(degs) <= 1


# -- contexts ----------------------------------------------------------------

@dataclass(frozen=True)
class SUnit:
    """A registered section unit: the chart it belongs to, its homogeneous
    representative (projective: a form in n+1 variables; affine: the chart
    polynomial itself) and that form's degree."""
    chart: int
    form: Poly
    degree: int


@dataclass(frozen=True)
class Context:
    kind: str                   # "projective" | "affine"
    dim: int
    home: int
    indices: tuple              # sorted chart indices of the overlap
    sunits: tuple = ()          # SUnit, sorted by chart

    def __post_init__(self):
        if self.kind not in ("projective", "affine"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if tuple(sorted(self.indices)) != self.indices:
            raise ValueError("context indices must be sorted")
        if self.home not in self.indices:
            raise ValueError("home chart must belong to the context")

    @property
    def nvars(self):
        return self.dim

    def axes(self):
        """Homogeneous coordinate index carried by each chart variable."""
        if self.kind == "affine":
            return tuple(range(1, self.dim + 1))
        return tuple(k for k in range(self.dim + 1) if k != self.home)

    def var_names(self):
        return tuple(f"x{k}" for k in self.axes())

    def unit_keys(self):
        """Deterministic unit order: coordinate units by index, then section
        units by chart."""
        keys = [f"c{k}" for k in self.indices if k != self.home]
        keys += [f"s{u.chart}" for u in self.sunits if u.chart in self.indices]
        return tuple(keys)

    def unit_poly(self, key):
        """The unit as a polynomial in this context's variables."""
        if key.startswith("c"):
            k = int(key[1:])
            if k == self.home or k not in self.indices:
                raise KeyError(key)
            return Poly.variable(self.nvars, self.axes().index(k))
        if key.startswith("s"):
            c = int(key[1:])
            for u in self.sunits:
                if u.chart == c and c in self.indices:
                    if self.kind == "affine":
                        return u.form
                    return dehomogenize(u.form, self.home)
            raise KeyError(key)
        raise KeyError(key)

    def sunit(self, chart):
        for u in self.sunits:
            if u.chart == chart:
                return u
        raise KeyError(f"s{chart}")

    def parse(self, text):
        return parse_poly(text, self.var_names())

    def format(self, p):
        return format_poly(p, self.var_names())


def _unit_sort(key):
    # Section units sort before coordinate units: extracting the (possibly
    # non-monomial) section forms first keeps greedy cancellation from eating
    # their monomial factors prematurely.
    return (0 if key[0] == "s" else 1, int(key[1:]))


class LocElem:
    """num / prod(unit^e): a regular function on the context's open set.

    `den` maps unit keys to positive exponents.  Construction normalizes:
    zero numerator clears the denominator, and each unit is greedily cancelled
    against the numerator in the fixed key order (deterministic; canonical for
    pairwise-coprime units, which covers the standard coordinate units).
    """

    __slots__ = ("ctx", "num", "den")

    def __init__(self, ctx, num, den=None, normalize=True):
        if num.arity != ctx.nvars:
            raise ValueError("numerator arity does not match context")
        den = {k: int(e) for k, e in (den or {}).items() if int(e) != 0}
        if any(e < 0 for e in den.values()):
            raise ValueError("denominator exponents must be positive")
        for key in den:
            ctx.unit_poly(key)  # raises KeyError if unavailable
        if normalize:
            if num.is_zero():
                den = {}
            else:
                for key in sorted(den, key=_unit_sort):
                    u = ctx.unit_poly(key)
                    while den.get(key, 0) > 0:
                        q = divide_exact(num, u)
                        if q is None:
                            break
                        num = q
                        den[key] -= 1
                    if den.get(key) == 0:
                        del den[key]
        self.ctx = ctx
        self.num = num
        self.den = den

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, ctx):
        return cls(ctx, Poly.zero(ctx.nvars))

    @classmethod
    def one(cls, ctx):
        return cls(ctx, Poly.const(ctx.nvars, 1))

    @classmethod
    def const(cls, ctx, value):
        return cls(ctx, Poly.const(ctx.nvars, value))

    @classmethod
    def from_poly(cls, ctx, p):
        return cls(ctx, p)

    # -- views ---------------------------------------------------------------

    def is_zero(self):
        return self.num.is_zero()

    def den_poly(self):
        out = Poly.const(self.ctx.nvars, 1)
        for key in sorted(self.den, key=_unit_sort):
            out = out * (self.ctx.unit_poly(key) ** self.den[key])
        return out

    def constant_value(self):
        if self.den:
            raise ValueError("not a constant")
        return self.num.constant_value()

    # -- arithmetic ---------------------------------------------------------

    def _chk(self, other):
        if not isinstance(other, LocElem):
            raise TypeError("LocElem expected")
        if other.ctx != self.ctx:
            raise ValueError("context mismatch; transport first")

    def __add__(self, other):
        self._chk(other)
        keys = set(self.den) | set(other.den)
        common = {k: max(self.den.get(k, 0), other.den.get(k, 0)) for k in keys}
        a = self.num
        b = other.num
        for k, e in common.items():
            u = self.ctx.unit_poly(k)
            a = a * u ** (e - self.den.get(k, 0))
            b = b * u ** (e - other.den.get(k, 0))
        return LocElem(self.ctx, a + b, common)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return LocElem(self.ctx, -self.num, dict(self.den), normalize=False)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._chk(other)
        den = dict(self.den)
        for k, e in other.den.items():
            den[k] = den.get(k, 0) + e
        return LocElem(self.ctx, self.num * other.num, den)

    __rmul__ = __mul__

    def scale(self, c):
        c = Fraction(c)
        if not c:
            return LocElem.zero(self.ctx)
        return LocElem(self.ctx, self.num.scale(c), dict(self.den),
                       normalize=False)

    def __truediv__(self, other):
        """Division by a unit expression only."""
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        dec = unit_decomposition(other)
        if dec is None:
            raise PreconditionViolated("division by a non-unit localized element")
        c, exps = dec
        num = self.num.scale(Fraction(1) / c)
        den = dict(self.den)
        for k, e in exps.items():
            if e > 0:
                den[k] = den.get(k, 0) + e
            elif e < 0:
                num = num * self.ctx.unit_poly(k) ** (-e)
        return LocElem(self.ctx, num, den)

    def __eq__(self, other):
        if not isinstance(other, LocElem):
            return NotImplemented
        self._chk(other)
        return (self.num * other.den_poly()) == (other.num * self.den_poly())

    def __hash__(self):
        raise TypeError("LocElem is unhashable (equality is extensional)")

    def __repr__(self):
        s = self.ctx.format(self.num)
        if self.den:
            d = "*".join(f"{k}^{e}" if e > 1 else k
                         for k, e in sorted(self.den.items(), key=lambda kv: _unit_sort(kv[0])))
            return f"({s})/({d})"
        return s


def loc_normalize(e):
    """Re-run canonical normalization (constructor already applies it)."""
    return LocElem(e.ctx, e.num, dict(e.den))


def unit_decomposition(e):
    """Write e as c * prod(units^a) with c a nonzero rational, or None.

    Extraction is greedy in the fixed unit order, which decides monomial
    cocktails of the standard units deterministically.
    """
    if e.is_zero():
        return None
    x = e.num
    extracted = {}
    for key in sorted(e.ctx.unit_keys(), key=_unit_sort):
        u = e.ctx.unit_poly(key)
        while True:
            q = divide_exact(x, u)
            if q is None or q.is_zero():
                break
            extracted[key] = extracted.get(key, 0) + 1
            x = q
    if not x.is_constant():
        return None
    c = x.constant_value()
    exps = {}
    for key in set(extracted) | set(e.den):
        a = extracted.get(key, 0) - e.den.get(key, 0)
        if a:
            exps[key] = a
    return c, exps


def is_unit_expression(e):
    return unit_decomposition(e) is not None


def unit_inverse(e):
    """Exact inverse of a unit expression."""
    dec = unit_decomposition(e)
    if dec is None:
        raise PreconditionViolated("inverse of a non-unit localized element")
    return LocElem.one(e.ctx) / e


# -- transport ----------------------------------------------------------------

def transport(e, dst):
    """Rewrite a localized element in another context, exactly.

    The destination must be a restriction of the source (its index set
    contains the source's) over the same ambient space; the home chart may
    change.  Projective transport goes through the homogeneous intermediate:
    the numerator is homogenized, all coordinate-unit and section-unit
    denominators become Laurent exponents against the homogeneous
    coordinates, and the result is dehomogenized at the destination home.
    A negative Laurent exponent at a coordinate not invertible in the
    destination raises PreconditionViolated.
    """
    src = e.ctx
    if src == dst:
        return e
    if (src.kind, src.dim) != (dst.kind, dst.dim):
        raise PreconditionViolated("transport between different ambients")
    if not set(src.indices) <= set(dst.indices):
        raise PreconditionViolated(
            f"transport target {dst.indices} does not refine {src.indices}")

    if src.kind == "affine":
        # One chart only: re-context, checking the units are still available.
        return LocElem(dst, e.num, dict(e.den))

    n = src.dim
    h, h2 = src.home, dst.home
    form, deg = homogenize(e.num, h, n)
    gamma = [0] * (n + 1)
    gamma[h] -= deg
    s_exps = {}
    for key, m in e.den.items():
        if key.startswith("c"):
            k = int(key[1:])
            gamma[k] -= m
            gamma[h] += m
        else:
            c = int(key[1:])
            u = src.sunit(c)
            gamma[h] += u.degree * m
            s_exps[c] = s_exps.get(c, 0) + m
    shift = deg - sum(src.sunit(c).degree * m for c, m in s_exps.items())
    gamma[h2] += shift
    if sum(gamma) != 0:
        raise AssertionError("transport bookkeeping lost homogeneity")

    num = dehomogenize(form, h2)
    den = {}
    for k in range(n + 1):
        if k == h2 or gamma[k] == 0:
            continue
        if gamma[k] > 0:
            num = num * Poly.variable(n, dst.axes().index(k)) ** gamma[k]
        else:
            if k not in dst.indices:
                raise PreconditionViolated(
                    f"element has a pole along x{k} = 0, not invertible on "
                    f"charts {dst.indices}")
            den[f"c{k}"] = -gamma[k]
    for c, m in s_exps.items():
        den[f"s{c}"] = den.get(f"s{c}", 0) + m
    return LocElem(dst, num, den)


# -- Laurent views (used by the Cech solver) ----------------------------------

def to_laurent(e):
    """Degree-0 Laurent expansion over the homogeneous coordinates, or None.

    Only defined in the monomial regime: every section unit appearing in the
    denominator must have a single-term homogeneous form.  Coordinate units
    are always monomial.  Affine contexts are not supported here.
    """
    ctx = e.ctx
    if ctx.kind != "projective":
        return None
    n = ctx.dim
    form, deg = homogenize(e.num, ctx.home, n)
    gamma = [0] * (n + 1)
    gamma[ctx.home] -= deg
    scale = Fraction(1)
    for key, m in e.den.items():
        if key.startswith("c"):
            k = int(key[1:])
            gamma[k] -= m
            gamma[ctx.home] += m
        else:
            u = ctx.sunit(int(key[1:]))
            if len(u.form.terms) != 1:
                return None
            (ue, uc), = u.form.terms.items()
            for k in range(n + 1):
                gamma[k] -= ue[k] * m
            gamma[ctx.home] += u.degree * m
            scale /= uc ** m
    out = {}
    for te, tc in form.terms.items():
        key = tuple(te[k] + gamma[k] for k in range(n + 1))
        v = out.get(key, Fraction(0)) + tc * scale
        if v:
            out[key] = v
        else:
            del out[key]
    return out


def from_laurent(laurent, ctx):
    """Rebuild a LocElem from a degree-0 Laurent dict over hom. coordinates."""
    n = ctx.dim
    total = LocElem.zero(ctx)
    for alpha, coeff in sorted(laurent.items()):
        if sum(alpha) != 0:
            raise ValueError("Laurent term is not degree zero")
        num = Poly.const(n, coeff)
        den = {}
        for k in range(n + 1):
            if k == ctx.home or alpha[k] == 0:
                continue
            if alpha[k] > 0:
                num = num * Poly.variable(n, ctx.axes().index(k)) ** alpha[k]
            else:
                if k not in ctx.indices:
                    raise PreconditionViolated(
                        f"Laurent term needs 1/x{k} outside charts {ctx.indices}")
                den[f"c{k}"] = -alpha[k]
        total = total + LocElem(ctx, num, den)
    return total


# -- matrices ------------------------------------------------------------------

class MatrixL:
    """Dense matrix of LocElems sharing one context."""

    __slots__ = ("ctx", "rows")

    def __init__(self, ctx, rows):
        self.ctx = ctx
        self.rows = tuple(tuple(rows[i]) for i in range(len(rows)))
        w = {len(r) for r in self.rows}
        if len(w) > 1:
            raise ValueError("ragged matrix")
        for r in self.rows:
            for x in r:
                if x.ctx != ctx:
                    raise ValueError("matrix entry context mismatch")

    @classmethod
    def identity(cls, ctx, size):
        one, zero = LocElem.one(ctx), LocElem.zero(ctx)
        return cls(ctx, [[one if i == j else zero for j in range(size)]
                         for i in range(size)])

    @classmethod
    def zeros(cls, ctx, nrows, ncols):
        z = LocElem.zero(ctx)
        return cls(ctx, [[z] * ncols for _ in range(nrows)])

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def row(self, i):
        return self.rows[i]

    def col(self, j):
        return tuple(r[j] for r in self.rows)

    def __add__(self, other):
        self._chk(other)
        return MatrixL(self.ctx, [[a + b for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other):
        self._chk(other)
        return MatrixL(self.ctx, [[a - b for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self):
        return MatrixL(self.ctx, [[-a for a in r] for r in self.rows])

    def __matmul__(self, other):
        if self.shape[1] != other.shape[0]:
            raise ValueError("matmul shape mismatch")
        self._chk_ctx(other)
        out = []
        for i in range(self.shape[0]):
            row = []
            for j in range(other.shape[1]):
                acc = LocElem.zero(self.ctx)
                for k in range(self.shape[1]):
                    acc = acc + self.rows[i][k] * other.rows[k][j]
                row.append(acc)
            out.append(row)
        return MatrixL(self.ctx, out)

    def matvec(self, vec):
        if len(vec) != self.shape[1]:
            raise ValueError("matvec shape mismatch")
        return tuple(
            _dot(self.rows[i], vec, self.ctx) for i in range(self.shape[0]))

    def scalar_mul(self, s):
        if isinstance(s, (int, Fraction)):
            return MatrixL(self.ctx, [[a.scale(s) for a in r] for r in self.rows])
        return MatrixL(self.ctx, [[a * s for a in r] for r in self.rows])

    def transpose(self):
        return MatrixL(self.ctx, list(zip(*self.rows)))

    def delete_row(self, i):
        return MatrixL(self.ctx, [r for k, r in enumerate(self.rows) if k != i])

    def delete_col(self, j):
        return MatrixL(self.ctx, [[x for k, x in enumerate(r) if k != j]
                                  for r in self.rows])

    def det(self):
        n, m = self.shape
        if n != m:
            raise ValueError("determinant of a non-square matrix")
        if n == 0:
            return LocElem.one(self.ctx)
        if n == 1:
            return self.rows[0][0]
        acc = LocElem.zero(self.ctx)
        sub = self.delete_row(0)
        for j in range(n):
            if self.rows[0][j].is_zero():
                continue
            minor = sub.delete_col(j).det()
            term = self.rows[0][j] * minor
            acc = acc + (term if j % 2 == 0 else -term)
        return acc

    def adjugate(self):
        n, m = self.shape
        if n != m:
            raise ValueError("adjugate of a non-square matrix")
        if n == 1:
            return MatrixL.identity(self.ctx, 1)
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                minor = self.delete_row(j).delete_col(i).det()
                row.append(minor if (i + j) % 2 == 0 else -minor)
            out.append(row)
        return MatrixL(self.ctx, out)

    def transport_to(self, dst):
        return MatrixL(dst, [[transport(a, dst) for a in r] for r in self.rows])

    def __eq__(self, other):
        if not isinstance(other, MatrixL):
            return NotImplemented
        if self.shape != other.shape:
            return False
        return all(a == b for r1, r2 in zip(self.rows, other.rows)
                   for a, b in zip(r1, r2))

    def __hash__(self):
        raise TypeError("MatrixL is unhashable")

    def _chk(self, other):
        if self.shape != other.shape:
            raise ValueError("matrix shape mismatch")
        self._chk_ctx(other)

    def _chk_ctx(self, other):
        if self.ctx != other.ctx:
            raise ValueError("matrix context mismatch; transport first")

    def __repr__(self):
        body = "; ".join("[" + ", ".join(repr(x) for x in r) + "]"
                         for r in self.rows)
        return f"MatrixL({body})"


def _dot(row, vec, ctx):
    acc = LocElem.zero(ctx)
    for a, b in zip(row, vec):
        acc = acc + a * b
    return acc


def from_blocks(ctx, blocks):
    """Assemble [[A, B], [C, D]]-style block layouts into one MatrixL."""
    rows = []
    for block_row in blocks:
        heights = {b.shape[0] for b in block_row}
        if len(heights) != 1:
            raise ValueError("block heights mismatch")
        h = heights.pop()
        for i in range(h):
            row = []
            for b in block_row:
                row.extend(b.rows[i])
            rows.append(row)
    return MatrixL(ctx, rows)
