"""Exact scalars over Q <= Q(sqrt d) <= Q(sqrt d)(i) and exact matrix algorithms.

Rational values are plain ``gmpy2.mpq``; anything involving ``sqrt(d)`` or
``i`` is a :class:`Scalar`.  Arithmetic between the two promotes as needed and
results that happen to be rational collapse back to ``mpq``, so the rational
fast path stays fast.

Matrices are numpy object arrays.  Elimination runs on nested lists
internally because per-element Python dispatch dominates either way.
"""

from __future__ import annotations

import numbers
import re
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from .errors import Degenerate, FieldMismatch, NotSymmetric

RATIONAL, QUADRATIC, GAUSSIAN = "rational", "quadratic", "gaussian"

ZERO = mpq(0)
ONE = mpq(1)


def _q(x):
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, numbers.Integral):
        return mpq(int(x))
    return mpq(x)


class Scalar:
    """a + b*sqrt(d) + c*i + e*i*sqrt(d) with rational a, b, c, e.

    Instances are immutable.  Use :func:`scalar` to build values; it returns
    a bare ``mpq`` when the value is rational.
    """

    __slots__ = ("a", "b", "c", "e", "d")

    def __init__(self, a=0, b=0, c=0, e=0, d=0):
        a, b, c, e = _q(a), _q(b), _q(c), _q(e)
        if b == 0 and e == 0:
            d = 0
        elif d < 2:
            raise FieldMismatch("a sqrt component needs a square-free d >= 2")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "d", int(d))

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    def __reduce__(self):
        return (Scalar, (self.a, self.b, self.c, self.e, self.d))

    @property
    def level(self):
        if self.c or self.e:
            return GAUSSIAN
        if self.b:
            return QUADRATIC
        return RATIONAL

    def parts(self):
        return self.a, self.b, self.c, self.e

    def conjugate(self):
        return scalar(self.a, self.b, -self.c, -self.e, self.d)

    def real(self):
        return scalar(self.a, self.b, 0, 0, self.d)

    def imag(self):
        return scalar(self.c, self.e, 0, 0, self.d)

    def __neg__(self):
        return scalar(-self.a, -self.b, -self.c, -self.e, self.d)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = _lift(other)
        if o is NotImplemented:
            return o
        d = _join(self.d, o.d)
        return scalar(self.a + o.a, self.b + o.b, self.c + o.c, self.e + o.e, d)

    __radd__ = __add__

    def __sub__(self, other):
        o = _lift(other)
        if o is NotImplemented:
            return o
        d = _join(self.d, o.d)
        return scalar(self.a - o.a, self.b - o.b, self.c - o.c, self.e - o.e, d)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, type(ZERO))):
            return scalar(self.a * other, self.b * other, self.c * other, self.e * other, self.d)
        o = _lift(other)
        if o is NotImplemented:
            return o
        d = _join(self.d, o.d)
        # (X0 + i X1)(Y0 + i Y1) with X, Y in Q(sqrt d)
        r0, r1 = _qmul(self.a, self.b, o.a, o.b, d)
        s0, s1 = _qmul(self.c, self.e, o.c, o.e, d)
        t0, t1 = _qmul(self.a, self.b, o.c, o.e, d)
        u0, u1 = _qmul(self.c, self.e, o.a, o.b, d)
        return scalar(r0 - s0, r1 - s1, t0 + u0, t1 + u1, d)

    __rmul__ = __mul__

    def inverse(self):
        d = self.d
        # 1/(Y0 + i Y1) = (Y0 - i Y1) / (Y0^2 + Y1^2), the norm is real
        n0, n1 = _qmul(self.a, self.b, self.a, self.b, d)
        m0, m1 = _qmul(self.c, self.e, self.c, self.e, d)
        u, v = n0 + m0, n1 + m1
        den = u * u - d * v * v
        if den == 0:
            raise ZeroDivisionError("Scalar division by zero")
        inv = Scalar(u / den, -v / den, 0, 0, d) if v else scalar(1 / u)
        return inv * scalar(self.a, self.b, -self.c, -self.e, d)

    def __truediv__(self, other):
        if isinstance(other, (int, type(ZERO))):
            if other == 0:
                raise ZeroDivisionError("Scalar division by zero")
            return self * (ONE / other)
        o = _lift(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __eq__(self, other):
        o = _lift(other)
        if o is NotImplemented:
            return False
        if (self.b or self.e) and (o.b or o.e) and self.d != o.d:
            return False
        return self.a == o.a and self.b == o.b and self.c == o.c and self.e == o.e

    def __hash__(self):
        if self.level == RATIONAL:
            return hash(self.a)
        return hash((self.a, self.b, self.c, self.e, self.d))

    def __bool__(self):
        return bool(self.a or self.b or self.c or self.e)

    def __repr__(self):
        return f"Scalar({format_scalar(self)})"

    def __str__(self):
        return format_scalar(self)


def _join(d1, d2):
    if d1 == 0:
        return d2
    if d2 == 0 or d1 == d2:
        return d1
    raise FieldMismatch(f"sqrt({d1}) and sqrt({d2}) mixed")


def _qmul(a, b, c, e, d):
    return a * c + d * b * e, a * e + b * c


def _lift(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, type(ZERO), Fraction)):
        return Scalar(_q(x))
    return NotImplemented


def scalar(a=0, b=0, c=0, e=0, d=0):
    """Build a field element, returning ``mpq`` whenever it is rational."""
    if not (b or c or e):
        return _q(a)
    return Scalar(a, b, c, e, d)


def sqrt(d):
    """The positive square root of a square-free integer ``d >= 2``."""
    return Scalar(0, 1, 0, 0, d)


I = Scalar(0, 0, 1, 0, 0)


def level(x):
    return x.level if isinstance(x, Scalar) else RATIONAL


def is_rational(x):
    return not isinstance(x, Scalar)


def conj(x):
    return x.conjugate() if isinstance(x, Scalar) else x


def to_field(x):
    """Coerce ints, Fractions, strings and field elements to a field element."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, str):
        return parse_scalar(x)
    return _q(x)


def sign(x) -> int:
    """Exact sign of a real field element under sqrt(d) > 0."""
    if isinstance(x, Scalar):
        if x.c or x.e:
            raise ValueError(f"sign of non-real element {x}")
        a, b, d = x.a, x.b, x.d
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sa == 0 or sb == 0 or sa == sb:
            return sa or sb
        # a and b*sqrt(d) have opposite signs: larger magnitude wins
        if a * a > b * b * d:
            return sa
        return sb
    return (x > 0) - (x < 0)


def _fmt_q(x):
    return str(_q(x))


def format_scalar(x) -> str:
    """Exact text: ``num/den`` or ``a+b*sqrt(d)+c*i+e*i*sqrt(d)`` (zero parts omitted)."""
    if not isinstance(x, Scalar):
        return _fmt_q(x)
    pieces = []
    for coeff, unit in ((x.a, ""), (x.b, f"sqrt({x.d})"), (x.c, "i"), (x.e, f"i*sqrt({x.d})")):
        if coeff == 0:
            continue
        if unit:
            pieces.append(f"{_fmt_q(coeff)}*{unit}")
        else:
            pieces.append(_fmt_q(coeff))
    out = "+".join(pieces)
    return out.replace("+-", "-")


_TERM = re.compile(
    r"([+-]?)\s*(\d+(?:/\d+)?)?\s*\*?\s*(i\s*\*\s*sqrt\(\s*(\d+)\s*\)|sqrt\(\s*(\d+)\s*\)|i)?"
)


def parse_scalar(text: str):
    """Inverse of :func:`format_scalar`; also accepts ``sqrt(2)``, ``-i``, ``1/2*sqrt(2)``."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty scalar literal")
    parts = [mpq(0)] * 4
    d = 0
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ValueError(f"cannot parse scalar literal {text!r}")
        sgn = -1 if m.group(1) == "-" else 1
        coeff = mpq(m.group(2)) if m.group(2) else mpq(1)
        unit = m.group(3)
        if unit is None:
            slot = 0
        elif unit == "i":
            slot = 2
        else:
            dd = int(m.group(4) or m.group(5))
            if d and dd != d:
                raise FieldMismatch(f"mixed radicands in {text!r}")
            d = dd
            slot = 3 if unit.startswith("i") else 1
        parts[slot] += sgn * coeff
        pos = m.end()
        if pos < len(s) and s[pos] not in "+-":
            raise ValueError(f"cannot parse scalar literal {text!r}")
    return scalar(*parts, d=d)


# --------------------------------------------------------------------------
# matrices


def as_matrix(rows, cols=None) -> np.ndarray:
    """Object-dtype matrix with every entry coerced by :func:`to_field`."""
    rows = [list(r) for r in rows]
    if not rows:
        return np.empty((0, cols or 0), dtype=object)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix")
    out = np.empty((len(rows), width), dtype=object)
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            out[i, j] = to_field(x)
    return out


def identity(n: int) -> np.ndarray:
    out = np.full((n, n), ZERO, dtype=object)
    for i in range(n):
        out[i, i] = ONE
    return out


def zeros(r: int, c: int) -> np.ndarray:
    return np.full((r, c), ZERO, dtype=object)


def is_zero_matrix(M) -> bool:
    return all(x == 0 for x in np.asarray(M).ravel())


def matrices_equal(A, B) -> bool:
    A, B = np.asarray(A), np.asarray(B)
    return A.shape == B.shape and all(x == y for x, y in zip(A.ravel(), B.ravel()))


def conj_transpose(M) -> np.ndarray:
    M = np.asarray(M)
    return np.vectorize(conj, otypes=[object])(M.T) if M.size else M.T.copy()


def is_integral(M) -> bool:
    for x in np.asarray(M).ravel():
        if isinstance(x, Scalar) or _q(x).denominator != 1:
            return False
    return True


def _rows(M):
    return [list(r) for r in np.asarray(M)]


def rref(M):
    """Reduced row echelon form and pivot columns.

    Pivots are chosen column by column, taking the first row at or below the
    current pivot row with a nonzero entry, so output is reproducible.
    """
    A = _rows(M)
    nrows = len(A)
    ncols = len(A[0]) if nrows else np.asarray(M).shape[1]
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        row = A[r]
        inv = ONE / row[c]
        if inv != 1:
            row = [x * inv if x != 0 else ZERO for x in row]
            A[r] = row
        nz = [j for j in range(c, ncols) if row[j] != 0]
        for i in range(nrows):
            if i == r:
                continue
            f = A[i][c]
            if f == 0:
                continue
            Ai = A[i]
            for j in nz:
                Ai[j] = Ai[j] - f * row[j]
        pivots.append(c)
        r += 1
    out = np.empty((nrows, ncols), dtype=object)
    for i in range(nrows):
        out[i, :] = A[i]
    return out, pivots


def rank(M) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(rref(M)[1])


def row_basis(vectors, width=None) -> np.ndarray:
    """Canonical (reduced echelon, pivot 1) basis of the span of ``vectors``."""
    vectors = [list(v) for v in vectors]
    if not vectors:
        return np.empty((0, width or 0), dtype=object)
    R, piv = rref(as_matrix(vectors))
    return R[: len(piv)]


def kernel_basis(M) -> np.ndarray:
    """Rows form a basis of {x : M x = 0}, returned in reduced echelon form."""
    M = np.asarray(M)
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return identity(ncols)
    R, piv = rref(M)
    free = [c for c in range(ncols) if c not in set(piv)]
    vecs = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for i, pc in enumerate(piv):
            v[pc] = -R[i, f]
        vecs.append(v)
    return row_basis(vecs, ncols)


def solve(M, b):
    """One solution x of M x = b, or ``None`` when inconsistent."""
    M = np.asarray(M)
    b = np.asarray(b, dtype=object)
    vector = b.ndim == 1
    B = b.reshape(-1, 1) if vector else b
    aug = np.concatenate([M, B], axis=1)
    R, piv = rref(aug)
    n = M.shape[1]
    if any(p >= n for p in piv):
        return None
    x = zeros(n, B.shape[1])
    for i, pc in enumerate(piv):
        x[pc, :] = R[i, n:]
    return x[:, 0] if vector else x


def inverse(M) -> np.ndarray:
    M = np.asarray(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("inverse of a non-square matrix")
    R, piv = rref(np.concatenate([M, identity(n)], axis=1))
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return R[:, n:]


def det(M):
    """Determinant by elimination (field division allowed)."""
    A = _rows(M)
    n = len(A)
    result = ONE
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c] != 0), None)
        if piv is None:
            return ZERO
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            result = -result
        p = A[c][c]
        result = result * p
        inv = ONE / p
        for i in range(c + 1, n):
            f = A[i][c]
            if f == 0:
                continue
            f = f * inv
            Ai, Ac = A[i], A[c]
            for j in range(c + 1, n):
                if Ac[j] != 0:
                    Ai[j] = Ai[j] - f * Ac[j]
    return result


def pfaffian(A):
    """Pfaffian of an alternating matrix by symplectic Schur complements."""
    M = _rows(A)
    n = len(M)
    if n % 2:
        return ZERO
    result = ONE
    while M:
        k = len(M)
        j = next((j for j in range(1, k) if M[0][j] != 0), None)
        if j is None:
            return ZERO
        if j != 1:
            # simultaneous row/column swap flips the sign
            M[1], M[j] = M[j], M[1]
            for row in M:
                row[1], row[j] = row[j], row[1]
            result = -result
        a = M[0][1]
        result = result * a
        inv = ONE / a
        r0, r1 = M[0], M[1]
        rest = []
        for i in range(2, k):
            ri = M[i]
            x0, x1 = r0[i], r1[i]
            row = ri[2:]
            if x0 != 0 or x1 != 0:
                # D + C^T B^{-1} C with B = [[0, a], [-a, 0]]
                for jj in range(2, k):
                    y0, y1 = r0[jj], r1[jj]
                    if (x1 != 0 and y0 != 0) or (x0 != 0 and y1 != 0):
                        row[jj - 2] = row[jj - 2] + (x1 * y0 - x0 * y1) * inv
            rest.append(row)
        M = rest
    return result


def rational_points(S, span: str = "gaussian") -> np.ndarray:
    """Basis (rows) of span(S) intersected with Q^m for S over Q(sqrt d)(i).

    ``span="gaussian"`` takes the Q(sqrt d)(i)-linear span (the right notion
    for kernels of complex-linear maps); ``span="real"`` takes the
    Q(sqrt d)-linear span, under which span{(1, 0), (0, i)} meets Q^2 in the
    first axis only.

    Membership in span(S) is the vanishing of every annihilating functional;
    for a rational vector each such equation splits into its 1, sqrt d, i and
    i*sqrt d components, each a rational equation.
    """
    S = np.asarray(S)
    m = S.shape[1]
    if S.shape[0] == 0:
        return np.empty((0, m), dtype=object)
    if span == "real":
        # realify: v = v' + i v'' becomes (v', v'') in F^{2m}; keep points with v'' = 0
        real = np.vectorize(lambda x: x.real() if isinstance(x, Scalar) else x, otypes=[object])
        imag = np.vectorize(lambda x: x.imag() if isinstance(x, Scalar) else ZERO, otypes=[object])
        P = rational_points(np.concatenate([real(S), imag(S)], axis=1))
        if P.shape[0] == 0:
            return P[:, :m]
        combos = kernel_basis(P[:, m:].T)
        if combos.shape[0] == 0:
            return np.empty((0, m), dtype=object)
        return row_basis(list(combos @ P[:, :m]), m)
    if span != "gaussian":
        raise ValueError(f"unknown span field {span!r}")
    ann = kernel_basis(S)
    if ann.shape[0] == 0:
        return identity(m)
    eqs = []
    for c in ann:
        comps = [[ZERO] * m for _ in range(4)]
        for j, x in enumerate(c):
            if isinstance(x, Scalar):
                for k, part in enumerate(x.parts()):
                    comps[k][j] = part
            else:
                comps[0][j] = _q(x)
        eqs.extend(row for row in comps if any(v != 0 for v in row))
    if not eqs:
        return identity(m)
    return kernel_basis(as_matrix(eqs))


def in_span(basis, v) -> bool:
    basis = np.asarray(basis)
    if basis.shape[0] == 0:
        return all(x == 0 for x in v)
    return rank(np.vstack([basis, np.asarray(v, dtype=object).reshape(1, -1)])) == rank(basis)


def is_positive_definite(S, hermitian: bool = False) -> bool:
    """Leading principal minors positive, decided exactly.

    Gaussian elimination without pivoting: the k-th pivot is the ratio of the
    k-th and (k-1)-th leading minors, so all minors are positive iff all
    pivots are.
    """
    S = np.asarray(S)
    n = S.shape[0]
    if S.shape != (n, n):
        raise NotSymmetric("non-square matrix")
    target = conj_transpose(S) if hermitian else S.T
    if not matrices_equal(S, target):
        raise NotSymmetric("matrix is not symmetric" if not hermitian else "matrix is not Hermitian")
    A = _rows(S)
    for k in range(n):
        p = A[k][k]
        if isinstance(p, Scalar) and (p.c or p.e):
            raise ValueError("non-real pivot in definiteness test")
        if sign(p) <= 0:
            return False
        inv = ONE / p
        for i in range(k + 1, n):
            f = A[i][k]
            if f == 0:
                continue
            f = f * inv
            for j in range(k + 1, n):
                if A[k][j] != 0:
                    A[i][j] = A[i][j] - f * A[k][j]
    return True


# --------------------------------------------------------------------------
# integer lattices


def _int_rows(M):
    rows = []
    for r in (M if isinstance(M, list) else np.asarray(M)):
        row = []
        for x in r:
            q = _q(x) if not isinstance(x, Scalar) else None
            if q is None or q.denominator != 1:
                raise ValueError("integer matrix required")
            row.append(int(q))
        rows.append(row)
    return rows


def _echelon_int(A, ncols, reduce_above=False):
    """Integer row echelon form in place by unimodular row operations.

    Returns the pivot columns; rows past the last pivot are zero.
    """
    nrows = len(A)
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        while True:
            nz = [i for i in range(r, nrows) if A[i][c] != 0]
            if not nz:
                break
            best = min(nz, key=lambda i: (abs(A[i][c]), i))
            A[r], A[best] = A[best], A[r]
            done = True
            pr = A[r]
            for i in range(r + 1, nrows):
                if A[i][c] != 0:
                    q = A[i][c] // pr[c]
                    Ai = A[i]
                    for j in range(len(Ai)):
                        if pr[j]:
                            Ai[j] -= q * pr[j]
                    if Ai[c] != 0:
                        done = False
            if done:
                break
        if r < nrows and A[r][c] != 0:
            if A[r][c] < 0:
                A[r] = [-x for x in A[r]]
            if reduce_above:
                pr = A[r]
                for i in range(r):
                    q = A[i][c] // pr[c]
                    if q:
                        A[i] = [x - q * y for x, y in zip(A[i], pr)]
            pivots.append(c)
            r += 1
    return pivots


def hermite_normal_form(vectors, width=None) -> np.ndarray:
    """Row Hermite normal form of the lattice spanned by integer ``vectors``."""
    A = _int_rows(vectors) if len(vectors) else []
    if not A:
        return np.empty((0, width or 0), dtype=object)
    ncols = len(A[0])
    piv = _echelon_int(A, ncols, reduce_above=True)
    return as_matrix(A[: len(piv)])


def integer_kernel(M, ncols=None) -> np.ndarray:
    """Z-basis (rows, Hermite normal form) of {x in Z^n : M x = 0}.

    The returned lattice is automatically saturated.
    """
    rows = _int_rows(M) if np.asarray(M).size else []
    n = len(rows[0]) if rows else ncols
    if n is None:
        raise ValueError("cannot infer ambient dimension")
    if not rows:
        return identity(n)
    r = len(rows)
    # rows of [M^T | I]: unimodular row ops keep the right block a Z-basis
    A = [[rows[i][j] for i in range(r)] + [int(j == k) for k in range(n)] for j in range(n)]
    piv = _echelon_int(A, r)
    kern = [row[r:] for row in A[len(piv):]]
    if not kern:
        return np.empty((0, n), dtype=object)
    return hermite_normal_form(kern, n)


def saturate(vectors, ambient: int | None = None) -> np.ndarray:
    """Basis of {x in Z^m : k x in span(vectors) for some k != 0}."""
    V = np.asarray(vectors, dtype=object)
    m = ambient if ambient is not None else V.shape[1]
    if V.size == 0:
        return np.empty((0, m), dtype=object)
    # scaling rows does not move the span
    V = [clear_denominators(row) for row in V]
    complement = integer_kernel(V, m)
    if complement.shape[0] == 0:
        return identity(m)
    return integer_kernel(complement, m)


def clear_denominators(v) -> list:
    """Smallest positive multiple of a rational vector that is integral and primitive."""
    from math import gcd, lcm

    qs = [_q(x) for x in v]
    den = 1
    for x in qs:
        den = lcm(den, int(x.denominator))
    ints = [int(x * den) for x in qs]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
    return ints


def lattice_index(M) -> int:
    """Index of the column lattice of an integer matrix in Z^rows (0 if not full rank)."""
    M = np.asarray(M)
    H = hermite_normal_form(list(M.T), M.shape[0])
    if H.shape[0] < M.shape[0]:
        return 0
    out = 1
    for i, row in enumerate(_int_rows(H)):
        pc = next(j for j, x in enumerate(row) if x)
        out *= row[pc]
    return abs(out)


def skew_normal_form(E):
    """Quasi-symplectic (Frobenius) basis of an integral alternating form.

    Returns ``(U, divisors)`` with ``U`` unimodular and
    ``U.T @ E @ U == [[0, D], [-D, 0]]``, ``D = diag(divisors)``, each divisor
    dividing the next.
    """
    M = _int_rows(E)
    n = len(M)
    if any(M[i][j] != -M[j][i] for i in range(n) for j in range(n)):
        raise ValueError("matrix is not alternating")
    if n % 2 or det(as_matrix(M)) == 0:
        raise Degenerate("alternating form is degenerate")
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap(i, j):
        if i == j:
            return
        M[i], M[j] = M[j], M[i]
        for row in M:
            row[i], row[j] = row[j], row[i]
        for row in U:
            row[i], row[j] = row[j], row[i]

    def negate(i):
        M[i] = [-x for x in M[i]]
        for row in M:
            row[i] = -row[i]
        for row in U:
            row[i] = -row[i]

    def add(i, j, q):
        # basis vector i += q * basis vector j
        if not q:
            return
        M[i] = [x + q * y for x, y in zip(M[i], M[j])]
        for row in M:
            row[i] += q * row[j]
        for row in U:
            row[i] += q * row[j]

    for t in range(0, n, 2):
        while True:
            best = None
            for i in range(t, n):
                for j in range(i + 1, n):
                    if M[i][j] and (best is None or abs(M[i][j]) < abs(M[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                raise Degenerate("alternating form is degenerate")
            i, j = best
            swap(t, i)
            if j == t:
                j = i
            swap(t + 1, j)
            if M[t][t + 1] < 0:
                negate(t + 1)
            a = M[t][t + 1]
            changed = False
            for k in range(t + 2, n):
                add(k, t + 1, -(M[t][k] // a))
                add(k, t, M[t + 1][k] // a)
                if M[t][k] or M[t + 1][k]:
                    changed = True
            if changed:
                continue
            bad = next(
                ((i, j) for i in range(t + 2, n) for j in range(t + 2, n) if M[i][j] % a),
                None,
            )
            if bad is None:
                break
            add(t, bad[0], 1)
    order = list(range(0, n, 2)) + list(range(1, n, 2))
    Uo = [[row[k] for k in order] for row in U]
    divisors = [M[t][t + 1] for t in range(0, n, 2)]
    return as_matrix(Uo), divisors


def format_matrix(M) -> list:
    """Row-major list of exact scalar strings."""
    return [[format_scalar(x) for x in row] for row in np.asarray(M)]
