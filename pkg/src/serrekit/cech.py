"""Cech machinery on the standard cover.

A degree-p cochain with values in (L*)^width assigns to every sorted
(p+1)-tuple of chart indices a width-tuple of localized elements.  The value
on a tuple lives on that tuple's overlap context (home = smallest index) and
is written in the trivialization of the LAST index of the tuple.

Differential convention (matching the transition-matrix calculus downstream):

    (d y)_{ij}   = y_j - h_ij y_i
    (d x)_{ijk}  = x_jk - x_ik + h_jk x_ij
    (d c)_{ijkl} = c_jkl - c_ikl + c_ijl - h_kl c_ijk

i.e. the alternating face sum where only the face dropping the LAST index
needs re-trivialization, by h_{last-1, last} of L = O(twist) (values are
L*-valued, and v_b = h_ab v_a re-trivializes them from a to b).

Writing a value v on the tuple K as the honest section sigma = v * x_last^-d
of O(-d), the twist disappears and the differential becomes the plain
simplicial one; in the monomial-denominator regime this turns coboundary
equations into finite exact linear systems, one per Laurent multidegree.
That regime is complete: solvable <=> solved, and unsolvable multidegrees are
reported as obstruction witnesses.  Outside it a bounded-degree ansatz is
tried and failure is only ever *inconclusive*.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

from .algebra import (LocElem, Poly, from_laurent, to_laurent, transport)
from .errors import (Inconclusive, NotACocycle, Obstructed, PreconditionViolated,
                     ShapeViolation)


class CechCochain:
    """Sparse cochain: only nonzero values are stored."""

    def __init__(self, cover, lb, degree, width, data=None):
        if degree < 0:
            raise ShapeViolation("cochain degree must be >= 0")
        self.cover = cover
        self.lb = lb
        self.degree = degree
        self.width = width
        self.data = {}
        for key, val in (data or {}).items():
            key = tuple(key)
            if tuple(sorted(set(key))) != key or len(key) != degree + 1:
                raise ShapeViolation(f"bad cochain key {key}")
            val = tuple(val)
            if len(val) != width:
                raise ShapeViolation(f"value width mismatch on {key}")
            if any(not v.is_zero() for v in val):
                self.data[key] = val

    def keys(self):
        """All sorted (degree+1)-tuples of the cover, not just stored ones."""
        return itertools.combinations(self.cover.charts, self.degree + 1)

    def ctx(self, key):
        return self.cover.ctx(key)

    def get(self, key):
        key = tuple(key)
        if key in self.data:
            return self.data[key]
        zero = LocElem.zero(self.ctx(key))
        return (zero,) * self.width

    def is_zero(self):
        return not self.data

    def map_values(self, fn):
        return CechCochain(self.cover, self.lb, self.degree, self.width,
                           {k: tuple(fn(k, v) for v in vals)
                            for k, vals in self.data.items()})

    def __add__(self, other):
        self._chk(other)
        out = {}
        for key in set(self.data) | set(other.data):
            out[key] = tuple(a + b for a, b in zip(self.get(key), other.get(key)))
        return CechCochain(self.cover, self.lb, self.degree, self.width, out)

    def __sub__(self, other):
        return self + other.map_values(lambda k, v: -v)

    def __neg__(self):
        return self.map_values(lambda k, v: -v)

    def __eq__(self, other):
        if not isinstance(other, CechCochain):
            return NotImplemented
        self._chk(other)
        return all(a == b for key in set(self.data) | set(other.data)
                   for a, b in zip(self.get(key), other.get(key)))

    def __hash__(self):
        raise TypeError("CechCochain is unhashable")

    def _chk(self, other):
        if (self.cover is not other.cover or self.degree != other.degree
                or self.width != other.width):
            raise ValueError("cochain shape mismatch")

    def __repr__(self):
        body = ", ".join(f"{k}: {v!r}" for k, v in sorted(self.data.items()))
        return f"CechCochain(deg={self.degree}, {{{body}}})"


def differential(c):
    """The twisted Cech differential described in the module docstring."""
    cover, lb = c.cover, c.lb
    p = c.degree
    out = {}
    for key in itertools.combinations(cover.charts, p + 2):
        ctx = cover.ctx(key)
        acc = [LocElem.zero(ctx) for _ in range(c.width)]
        for m in range(p + 2):
            face = key[:m] + key[m + 1:]
            vals = c.get(face)
            sign = -1 if m % 2 else 1
            if m == p + 1:
                twist = lb.h(key[-2], key[-1], ctx)
                moved = [transport(v, ctx) * twist for v in vals]
            else:
                moved = [transport(v, ctx) for v in vals]
            for w in range(c.width):
                acc[w] = acc[w] + moved[w].scale(sign)
        out[key] = tuple(acc)
    return CechCochain(cover, lb, p + 1, c.width, out)


def is_cocycle(c):
    return differential(c).is_zero()


# -- exact solver -----------------------------------------------------------------

def _sigma_laurent(cochain, key, w):
    """Laurent dict of the honest O(-twist) section for component w on key,
    or None when outside the monomial regime."""
    v = cochain.get(key)[w]
    lau = to_laurent(v)
    if lau is None:
        return None
    d = cochain.lb.twist
    last = key[-1]
    out = {}
    for alpha, coeff in lau.items():
        shifted = list(alpha)
        shifted[last] -= d
        out[tuple(shifted)] = coeff
    return out


def _valid(alpha, key):
    return all(a >= 0 for k, a in enumerate(alpha) if k not in key)


def _solve_exact(rows, ncols):
    """Gaussian elimination over Fraction.  rows: (coeff-dict, rhs).
    Returns a solution vector (free vars = 0) or None if inconsistent."""
    mat = [[row.get(j, Fraction(0)) for j in range(ncols)] + [rhs]
           for row, rhs in rows]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][col]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = Fraction(1) / mat[r][col]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col]:
                f = mat[i][col]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    for i in range(r, len(mat)):
        if mat[i][ncols]:
            return None
    sol = [Fraction(0)] * ncols
    for i, col in enumerate(pivots):
        sol[col] = mat[i][ncols]
    return sol


def _solve_monomial(c):
    """Complete solver for the monomial regime.  Returns the degree-(p-1)
    solution data, or raises Obstructed with a witness multidegree."""
    cover = c.cover
    p = c.degree
    keys = list(itertools.combinations(cover.charts, p + 1))
    unknowns_keys = list(itertools.combinations(cover.charts, p))
    out = {}
    for w in range(c.width):
        sigmas = {}
        degrees = set()
        for key in c.data:
            lau = _sigma_laurent(c, key, w)
            sigmas[key] = lau
            degrees.update(lau.keys())
        solution_lau = {J: {} for J in unknowns_keys}
        for alpha in sorted(degrees):
            cols = [J for J in unknowns_keys if _valid(alpha, J)]
            col_index = {J: i for i, J in enumerate(cols)}
            rows = []
            for key in keys:
                coeffs = {}
                for m in range(p + 1):
                    face = key[:m] + key[m + 1:]
                    if face in col_index:
                        j = col_index[face]
                        sign = Fraction(-1 if m % 2 else 1)
                        coeffs[j] = coeffs.get(j, Fraction(0)) + sign
                rhs = sigmas.get(key, {}).get(alpha, Fraction(0)) \
                    if key in sigmas else Fraction(0)
                rows.append((coeffs, rhs))
            sol = _solve_exact(rows, len(cols))
            if sol is None:
                raise Obstructed(
                    "coboundary equation is exactly unsolvable: the class at "
                    f"multidegree {alpha} (component {w + 1}) is a nonzero "
                    "obstruction",
                    component=w + 1, multidegree=alpha,
                    witness={"sections": {
                        ",".join(map(str, key)): str(sigmas[key][alpha])
                        for key in sigmas if alpha in sigmas[key]}})
            for J, i in col_index.items():
                if sol[i]:
                    solution_lau[J][alpha] = sol[i]
        for J, lau in solution_lau.items():
            if not lau:
                continue
            ctx = cover.ctx(J)
            d = c.lb.twist
            shifted = {}
            for alpha, coeff in lau.items():
                a = list(alpha)
                a[J[-1]] += d
                shifted[tuple(a)] = coeff
            val = from_laurent(shifted, ctx)
            prev = out.setdefault(J, [LocElem.zero(ctx)] * c.width)
            prev[w] = val
    return {J: tuple(v) for J, v in out.items()}


def _solve_ansatz(c, max_degree):
    """Bounded ansatz for the non-monomial regime: each unknown value is a
    generic numerator of bounded degree over a fixed unit-denominator.
    Success yields an exact solution; failure is only Inconclusive."""
    cover, lb = c.cover, c.lb
    p = c.degree
    den_bound = max((e for vals in c.data.values() for v in vals
                     for e in v.den.values()), default=0) + abs(lb.twist)
    unknown_keys = list(itertools.combinations(cover.charts, p))

    # columns: (J, w, monomial exponent tuple)
    columns = []
    basis = {}  # (J, mono) -> LocElem on ctx(J) (the coefficient-1 element)
    for J in unknown_keys:
        ctx = cover.ctx(J)
        den = {k: den_bound for k in ctx.unit_keys()} if den_bound else {}
        monos = [e for deg in range(max_degree + 1)
                 for e in itertools.combinations_with_replacement(
                     range(ctx.nvars), deg)]
        for e in monos:
            exps = [0] * ctx.nvars
            for i in e:
                exps[i] += 1
            exps = tuple(exps)
            base = LocElem(ctx, Poly.monomial(ctx.nvars, exps), dict(den),
                           normalize=False)
            basis[(J, exps)] = base
            for w in range(c.width):
                columns.append((J, w, exps))
    col_index = {col: i for i, col in enumerate(columns)}

    # Each target key contributes polynomial-coefficient equations after
    # clearing a common denominator.
    rows = []
    for key in itertools.combinations(cover.charts, p + 1):
        ctx = cover.ctx(key)
        target = c.get(key)
        # contribution of column (J, w, mono) to component w on this key
        contribs = {}
        for m in range(p + 1):
            face = key[:m] + key[m + 1:]
            sign = Fraction(-1 if m % 2 else 1)
            for (J, exps), base in basis.items():
                if J != face:
                    continue
                moved = transport(base, ctx)
                if m == p:
                    moved = moved * lb.h(key[-2], key[-1], ctx)
                moved = moved.scale(sign)
                for w in range(c.width):
                    contribs.setdefault(w, {})[(J, w, exps)] = moved
        for w in range(c.width):
            terms = contribs.get(w, {})
            everything = list(terms.values()) + [target[w]]
            common = {}
            for e in everything:
                for k, a in e.den.items():
                    common[k] = max(common.get(k, 0), a)

            def cleared(e):
                num = e.num
                for k, a in common.items():
                    num = num * ctx.unit_poly(k) ** (a - e.den.get(k, 0))
                return num

            poly_cols = {col: cleared(e) for col, e in terms.items()}
            rhs_poly = cleared(target[w])
            monos = set(rhs_poly.terms)
            for q in poly_cols.values():
                monos.update(q.terms)
            for mono in sorted(monos):
                coeffs = {}
                for col, q in poly_cols.items():
                    a = q.terms.get(mono)
                    if a:
                        coeffs[col_index[col]] = a
                rows.append((coeffs, rhs_poly.terms.get(mono, Fraction(0))))

    sol = _solve_exact(rows, len(columns))
    if sol is None:
        raise Inconclusive(
            f"bounded ansatz (numerator degree <= {max_degree}) found no "
            "solution; the coboundary equation was not decided")
    out = {}
    for i, (J, w, exps) in enumerate(columns):
        if not sol[i]:
            continue
        ctx = cover.ctx(J)
        vals = out.setdefault(J, [LocElem.zero(ctx)] * c.width)
        vals[w] = vals[w] + basis[(J, exps)].scale(sol[i])
    return {J: tuple(v) for J, v in out.items()}


def coboundary_solve(c, max_degree=8):
    """Solve d(xi) = c exactly.

    The input must be a cocycle.  In the monomial-denominator regime the
    solver is complete and unsolvability raises Obstructed with the witness
    multidegree (the cohomology class).  Otherwise a bounded ansatz runs and
    failure raises Inconclusive.
    """
    if c.degree < 1:
        raise PreconditionViolated("cannot lower a degree-0 cochain")
    if not is_cocycle(c):
        raise NotACocycle("coboundary_solve target is not a cocycle")
    if c.is_zero():
        return CechCochain(c.cover, c.lb, c.degree - 1, c.width, {})
    # The per-multidegree system is sound and complete only when every value
    # expands to Laurent monomials whose poles stay inside its own key's
    # coordinates; registered section units can violate that, in which case
    # only the (never-conclusive) ansatz may run.
    monomial = all(
        to_laurent(v) is not None for vals in c.data.values() for v in vals)
    if monomial:
        monomial = all(_valid(alpha, key)
                       for key in c.data for w in range(c.width)
                       for alpha in _sigma_laurent(c, key, w))
    if monomial:
        data = _solve_monomial(c)
    else:
        data = _solve_ansatz(c, max_degree)
    xi = CechCochain(c.cover, c.lb, c.degree - 1, c.width, data)
    if differential(xi) != c:
        raise AssertionError("coboundary solution failed re-verification")
    return xi


# -- line bundle cohomology dimensions ------------------------------------------

def cohomology_dim(ambient, twist, degree):
    """dim H^degree(P^n, O(twist)) by the classical Laurent-monomial count
    over the standard cover: H^0 counts monomials with all exponents >= 0,
    H^n those with all exponents <= -1, nothing in between."""
    if ambient.kind != "projective":
        raise ShapeViolation("cohomology dimensions are for projective space")
    n = ambient.dim
    m = int(twist)
    q = int(degree)
    if q < 0 or q > n:
        return 0
    if q == 0:
        return comb(m + n, n) if m >= 0 else 0
    if q == n:
        return comb(-m - 1, n) if -m - 1 >= n else 0
    return 0
