"""Sparse exterior algebra over exact scalars.

A multi-index ``I = (i_1 < ... < i_k)`` over positions ``1..dim`` is stored as
the bitmask ``sum(1 << (i - 1))``.  Forms and multivectors keep a dict from
mask to nonzero coefficient, always iterated in ascending mask order, so
every serialization is canonical.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Iterable, Mapping

import numpy as np

from .errors import AmbientMismatch, DegreeMismatch, DegreeZero, EvenP
from .exact_linalg import (
    ONE,
    ZERO,
    as_matrix,
    det,
    format_scalar,
    parse_scalar,
    pfaffian,
    to_field,
    zeros,
)

MAX_AMBIENT = 64


def mask_of(indices: Iterable[int]) -> int:
    """Bitmask of 1-based positions (order and duplicates are not checked)."""
    m = 0
    for i in indices:
        m |= 1 << (i - 1)
    return m


def indices_of(mask: int) -> tuple:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def bits(mask: int):
    """0-based bit positions of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def merge_sign(a: int, b: int) -> int:
    """Sign of sorting the concatenation (indices of a) + (indices of b).

    Caller guarantees ``a & b == 0``.
    """
    s = 0
    while b:
        low = b & -b
        s += (a & ~((low << 1) - 1)).bit_count()
        b ^= low
    return -1 if s & 1 else 1


@lru_cache(maxsize=None)
def basis_masks(dim: int, k: int) -> tuple:
    """All k-subsets of ``1..dim`` as masks, ascending."""
    if k < 0 or k > dim:
        return ()
    return tuple(sorted(mask_of(c) for c in combinations(range(1, dim + 1), k)))


@lru_cache(maxsize=None)
def basis_index(dim: int, k: int) -> dict:
    return {m: i for i, m in enumerate(basis_masks(dim, k))}


class _Graded:
    """Homogeneous element of an exterior power, sparse over masks."""

    __slots__ = ("dim", "degree", "terms")

    def __init__(self, dim: int, degree: int, terms: Mapping[int, object] | None = None):
        if dim > MAX_AMBIENT:
            raise ValueError(f"ambient dimension {dim} exceeds {MAX_AMBIENT}")
        self.dim = dim
        self.degree = degree
        clean = {}
        if terms:
            for m in sorted(terms):
                c = terms[m]
                if c != 0:
                    clean[m] = c
        self.terms = clean

    # construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, dim: int, data: Mapping[tuple, object], degree: int | None = None):
        """Build from ``{(i_1, ..., i_k): coeff}`` with 1-based, possibly unsorted indices."""
        terms: dict = {}
        for idx, c in data.items():
            idx = tuple(idx)
            if len(set(idx)) != len(idx):
                continue
            if degree is None:
                degree = len(idx)
            elif len(idx) != degree:
                raise DegreeMismatch("inhomogeneous input")
            if any(i < 1 or i > dim for i in idx):
                raise AmbientMismatch(f"index out of range 1..{dim}")
            # parity of the sorting permutation
            inv = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx)) if idx[a] > idx[b])
            m = mask_of(idx)
            val = to_field(c)
            terms[m] = terms.get(m, ZERO) + (-val if inv & 1 else val)
        return cls(dim, degree or 0, terms)

    @classmethod
    def basis(cls, dim: int, indices: Iterable[int]):
        idx = tuple(indices)
        return cls.from_dict(dim, {idx: 1}, degree=len(idx))

    @classmethod
    def scalar(cls, dim: int, value=1):
        return cls(dim, 0, {0: to_field(value)})

    @classmethod
    def zero(cls, dim: int, degree: int):
        return cls(dim, degree, {})

    @classmethod
    def from_vector(cls, dim: int, degree: int, vec):
        masks = basis_masks(dim, degree)
        return cls(dim, degree, {m: to_field(c) for m, c in zip(masks, vec) if c != 0})

    # queries --------------------------------------------------------------
    def to_vector(self) -> np.ndarray:
        idx = basis_index(self.dim, self.degree)
        out = np.full(len(idx), ZERO, dtype=object)
        for m, c in self.terms.items():
            out[idx[m]] = c
        return out

    def coefficient(self, indices) -> object:
        return self.terms.get(mask_of(indices), ZERO)

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        return self.terms.items()

    def __len__(self):
        return len(self.terms)

    def map_coefficients(self, fn):
        return type(self)(self.dim, self.degree, {m: fn(c) for m, c in self.terms.items()})

    # arithmetic -----------------------------------------------------------
    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.dim != self.dim:
            raise AmbientMismatch(f"ambient {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._check(other)
        if other.degree != self.degree and self.terms and other.terms:
            raise DegreeMismatch(f"degree {self.degree} + degree {other.degree}")
        deg = self.degree if self.terms or not other.terms else other.degree
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, ZERO) + c
        return type(self)(self.dim, deg, out)

    def __neg__(self):
        return type(self)(self.dim, self.degree, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, _Graded):
            return NotImplemented
        c = to_field(c)
        return type(self)(self.dim, self.degree, {m: c * v for m, v in self.terms.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, _Graded) or type(other) is not type(self):
            return NotImplemented
        if self.dim != other.dim:
            return False
        if self.terms.keys() != other.terms.keys():
            return False
        if self.terms and self.degree != other.degree:
            return False
        return all(self.terms[m] == other.terms[m] for m in self.terms)

    __hash__ = None

    # text -------------------------------------------------------------------
    def serialize(self) -> str:
        """One ``i1,...,ik : scalar`` line per term, ascending bitmask order."""
        lines = []
        for m, c in self.terms.items():
            lines.append(f"{','.join(str(i) for i in indices_of(m))} : {format_scalar(c)}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, dim: int, degree: int, text: str):
        data = {}
        for line in text.strip().splitlines():
            if not line.strip():
                continue
            left, right = line.split(":")
            idx = tuple(int(t) for t in left.split(",") if t.strip())
            data[idx] = parse_scalar(right.strip())
        out = cls.from_dict(dim, data, degree=degree)
        out.degree = degree
        return out

    def __repr__(self):
        body = " + ".join(
            f"({format_scalar(c)})e{''.join(str(i) for i in indices_of(m)) or '0'}"
            for m, c in self.terms.items()
        )
        return f"{type(self).__name__}(dim={self.dim}, deg={self.degree}: {body or '0'})"


class KForm(_Graded):
    """Translation-invariant alternating k-form; ``dx^i`` has mask ``1 << (i-1)``."""

    __slots__ = ()

    def evaluate(self, vectors) -> object:
        """Value on the given vectors (each a length-``dim`` sequence)."""
        vectors = list(vectors)
        if len(vectors) != self.degree:
            raise DegreeMismatch(f"{self.degree}-form evaluated on {len(vectors)} vectors")
        if self.degree == 0:
            return self.terms.get(0, ZERO)
        V = as_matrix([list(v) for v in vectors]).T
        total = ZERO
        for m, c in self.terms.items():
            rows = list(bits(m))
            total = total + c * det(V[rows, :])
        return total


class Multivector(_Graded):
    """Element of the k-th exterior power of V, ``e_I`` keyed by mask."""

    __slots__ = ()


def dx(i: int, dim: int) -> KForm:
    return KForm(dim, 1, {1 << (i - 1): ONE})


def e(i: int, dim: int) -> Multivector:
    return Multivector(dim, 1, {1 << (i - 1): ONE})


def wedge(a: _Graded, b: _Graded) -> _Graded:
    """Exterior product; vanishes silently when the degrees overflow the ambient."""
    a._check(b)
    deg = a.degree + b.degree
    out: dict = {}
    if deg <= a.dim:
        get = out.get
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                if ma & mb:
                    continue
                m = ma | mb
                v = ca * cb
                if merge_sign(ma, mb) < 0:
                    v = -v
                out[m] = get(m, ZERO) + v
    return type(a)(a.dim, deg, out)


def wedge_all(forms, dim: int, cls=KForm):
    out = cls.scalar(dim)
    for f in forms:
        out = wedge(out, f)
    return out


def power(w: _Graded, m: int) -> _Graded:
    """``w ^ w ^ ... ^ w`` (m factors); ``power(w, 0)`` is the constant 1."""
    if w.degree != 2:
        raise DegreeMismatch("power is defined for 2-forms")
    if m < 0:
        raise ValueError("negative power")
    out = type(w).scalar(w.dim)
    for _ in range(m):
        if out.degree + 2 > w.dim:
            return type(w).zero(w.dim, 2 * m)
        out = wedge(out, w)
    return out


def to_skew_matrix(w: _Graded) -> np.ndarray:
    """Alternating matrix with ``M[i, j] = w(e_i, e_j)`` for a 2-form."""
    if w.degree != 2:
        raise DegreeMismatch("matrix form needs degree 2")
    M = zeros(w.dim, w.dim)
    for m, c in w.terms.items():
        i, j = bits(m)
        M[i, j] = c
        M[j, i] = -c
    return M


def from_skew_matrix(M, cls=KForm) -> _Graded:
    M = np.asarray(M)
    n = M.shape[0]
    terms = {}
    for i in range(n):
        for j in range(i + 1, n):
            if M[i, j] != 0:
                terms[(1 << i) | (1 << j)] = M[i, j]
    return cls(n, 2, terms)


def power_coefficient(w: _Graded, mask: int):
    """Coefficient of ``power(w, k)`` on ``mask`` (|mask| = 2k) as ``k! Pf(W[S, S])``."""
    k2 = mask.bit_count()
    if k2 % 2:
        return ZERO
    idx = list(bits(mask))
    W = to_skew_matrix(w) if not isinstance(w, np.ndarray) else w
    sub = W[np.ix_(idx, idx)] if idx else W[:0, :0]
    return factorial(k2 // 2) * pfaffian(sub) if idx else ONE


def interior(v, w: _Graded) -> _Graded:
    """Contraction in the first slot: ``(v -| w)(x_2, ...) = w(v, x_2, ...)``."""
    if w.degree == 0:
        raise DegreeZero("cannot contract a 0-form")
    v = [to_field(x) for x in v]
    if len(v) != w.dim:
        raise AmbientMismatch("vector length differs from ambient dimension")
    out: dict = {}
    get = out.get
    for m, c in w.terms.items():
        below = 0
        rest = m
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            vi = v[i]
            if vi != 0:
                t = m ^ low
                val = vi * c
                out[t] = get(t, ZERO) + (-val if below & 1 else val)
            below += 1
            rest ^= low
    return type(w)(w.dim, w.degree - 1, out)


class _MinorTable:
    """Memoized minors of one matrix, keyed by (row mask, column mask)."""

    def __init__(self, M):
        self.M = np.asarray(M)
        self.cache: dict = {}

    def __call__(self, rmask: int, cmask: int):
        if rmask == 0:
            return ONE
        key = (rmask, cmask)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        c0 = (cmask & -cmask).bit_length() - 1
        rest_c = cmask & (cmask - 1)
        total = ZERO
        pos = 0
        r = rmask
        while r:
            low = r & -r
            i = low.bit_length() - 1
            x = self.M[i, c0]
            if x != 0:
                sub = self(rmask ^ low, rest_c)
                if sub != 0:
                    term = x * sub
                    total = total - term if pos & 1 else total + term
            pos += 1
            r ^= low
        self.cache[key] = total
        return total


def compound_matrix(M, p: int) -> np.ndarray:
    """p-th compound: entry (I, J) is the minor with rows I and columns J."""
    M = np.asarray(M)
    rows = basis_masks(M.shape[0], p)
    cols = basis_masks(M.shape[1], p)
    minor = _MinorTable(M)
    out = np.empty((len(rows), len(cols)), dtype=object)
    for a, rm in enumerate(rows):
        for b, cm in enumerate(cols):
            out[a, b] = minor(rm, cm)
    return out


def induced_power_map(M, p: int) -> np.ndarray:
    """Matrix of the p-th exterior power of M in the ascending-mask basis."""
    M = np.asarray(M)
    if M.shape[0] != M.shape[1] or not 0 < p <= M.shape[0]:
        raise ValueError("square matrix and 0 < p <= dim required")
    return compound_matrix(M, p)


def gram_extension(E, p: int) -> np.ndarray:
    """Alternating form on the p-th exterior power with Gram-determinant entries."""
    if p % 2 == 0:
        raise EvenP(f"p = {p} is even")
    E = np.asarray(E)
    n = E.shape[0]
    if any(E[i, j] != -E[j, i] for i in range(n) for j in range(n)):
        raise ValueError("E must be alternating")
    out = compound_matrix(E, p)
    m = out.shape[0]
    if any(out[i, j] != -out[j, i] for i in range(m) for j in range(i, m)):
        raise ArithmeticError("Gram extension failed to be alternating")
    return out


def shuffles(p: int):
    """(p, p)-shuffles of 1..2p as (first half, second half, sign)."""
    full = (1 << (2 * p)) - 1
    for first in combinations(range(1, 2 * p + 1), p):
        fm = mask_of(first)
        sm = full ^ fm
        yield first, indices_of(sm), merge_sign(fm, sm)


def shuffle_comultiplication(p: int, x: Multivector) -> Multivector:
    """Map the 2p-th exterior power into the second exterior power of the p-th.

    ``v_1 ^ ... ^ v_2p`` goes to the sum over (p, p)-shuffles of
    ``sgn * (v_s1 ^ ... ^ v_sp) (x) (v_s(p+1) ^ ... ^ v_s2p)``; for odd p the
    tensor pairs up as ``e_I ^ e_J``.  Output lives on the ambient of
    dimension C(dim, p) with ``e_I`` at its ascending-mask position.
    """
    if x.degree != 2 * p:
        raise DegreeMismatch(f"expected degree {2 * p}, got {x.degree}")
    if p % 2 == 0:
        raise EvenP(f"p = {p} is even")
    idx = basis_index(x.dim, p)
    big = len(idx)
    out: dict = {}
    for m, c in x.terms.items():
        pos = list(bits(m))
        for first in combinations(pos, p):
            im = 0
            for b in first:
                im |= 1 << b
            jm = m ^ im
            a, b = idx[im], idx[jm]
            if a > b:
                continue
            key = (1 << a) | (1 << b)
            val = c if merge_sign(im, jm) > 0 else -c
            out[key] = out.get(key, ZERO) + val
    return Multivector(big, 2, out)


def pullback_form(M, u: KForm) -> KForm:
    """Pull back along the linear map with matrix M (target_dim x source_dim)."""
    M = np.asarray(M)
    tdim, sdim = M.shape
    if u.dim != tdim:
        raise AmbientMismatch("form ambient differs from matrix rows")
    if u.degree == 0:
        return KForm(sdim, 0, dict(u.terms))
    if u.degree == 2:
        U = to_skew_matrix(u)
        return from_skew_matrix(M.T @ U @ M if sdim else zeros(0, 0))
    rows = [KForm(sdim, 1, {1 << j: M[t, j] for j in range(sdim) if M[t, j] != 0}) for t in range(tdim)]
    out = KForm.zero(sdim, u.degree)
    for m, c in u.terms.items():
        term = KForm.scalar(sdim, c)
        for t in bits(m):
            term = wedge(term, rows[t])
        out = out + term
    return out


def square_pullback_coefficients(u: KForm, B, B_inv, det_B, masks) -> dict:
    """Selected coefficients of ``B^* u`` for an invertible square B.

    Each coefficient is a sum of k x k minors of B; for k above half the
    dimension the complementary minor of ``B^{-1}`` (Jacobi) is cheaper.
    """
    B = np.asarray(B)
    n = B.shape[0]
    k = u.degree
    full = (1 << n) - 1
    use_jacobi = 2 * k > n
    table = _MinorTable(B_inv if use_jacobi else B)
    out = {}
    for s in masks:
        total = ZERO
        for t, c in u.terms.items():
            if use_jacobi:
                # det B[T, S] = (-1)^{sum T + sum S} det B * det B^{-1}[S^c, T^c]
                par = sum(bits(t)) + sum(bits(s)) + 2 * k
                minor = table(full ^ s, full ^ t)
                if minor == 0:
                    continue
                val = det_B * minor
                if par & 1:
                    val = -val
            else:
                val = table(t, s)
                if val == 0:
                    continue
            total = total + c * val
        if total != 0:
            out[s] = total
    return out


def hodge_numbers_of_torus(n: int, a: int, b: int) -> int:
    """dim of the (a, b) part of the complexified k-forms on a complex n-torus."""
    return comb(n, a) * comb(n, b)
