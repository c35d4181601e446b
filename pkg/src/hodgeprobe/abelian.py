"""Polarized abelian varieties on the standard lattice Z^{2n}.

A variety is a pair (J, E): a complex structure and an integral alternating
form satisfying the Riemann relations.  Hodge-theoretic data (bidegree
components, rational (k,k) classes, Lefschetz maps, divisor products) are
computed exactly on translation-invariant forms.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import UnknownLabel
from .exact_linalg import (
    I,
    ONE,
    ZERO,
    Scalar,
    as_matrix,
    format_matrix,
    identity,
    in_span,
    inverse,
    is_integral,
    is_positive_definite,
    kernel_basis,
    matrices_equal,
    rank,
    rational_points,
    row_basis,
    scalar,
    skew_normal_form,
    sqrt,
    zeros,
)
from .exterior import (
    KForm,
    basis_index,
    basis_masks,
    bits,
    from_skew_matrix,
    merge_sign,
    power,
    wedge,
)


class PolarizedAbelianVariety:
    """Lattice Z^{2n} with complex structure ``J`` and polarization ``E``.

    ``E(x, y) = x^T E y``; ``J`` acts on column vectors.  Instances are
    treated as immutable; derived matrices are cached per degree.
    """

    def __init__(self, J, E, label: str = "", d: int | None = None):
        self.J = as_matrix(J)
        self.E = as_matrix(E)
        two_n = self.J.shape[0]
        if self.J.shape != (two_n, two_n) or self.E.shape != (two_n, two_n) or two_n % 2:
            raise ValueError("J and E must be square of the same even size")
        self.n = two_n // 2
        self.label = label
        if d is None:
            d = max((x.d for x in self.J.ravel() if isinstance(x, Scalar)), default=0)
        self.d = d
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return 2 * self.n

    def cached(self, key, build):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = build()
        with self._lock:
            return self._cache.setdefault(key, value)

    def __repr__(self):
        return f"PolarizedAbelianVariety({self.label or '?'}, n={self.n})"

    def describe(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "field_d": self.d,
            "J": format_matrix(self.J),
            "E": format_matrix(self.E),
        }


@dataclass
class ValidationReport:
    checks: dict
    messages: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": dict(self.checks), "messages": dict(self.messages)}


def validate(A: PolarizedAbelianVariety) -> ValidationReport:
    """Check the Riemann relations; never raises on a failed axiom."""
    J, E = A.J, A.E
    n2 = A.dim
    checks, msgs = {}, {}
    checks["J_squared"] = matrices_equal(J @ J, -identity(n2))
    if not checks["J_squared"]:
        msgs["J_squared"] = "J^2 != -I"
    alt = matrices_equal(E.T, -E)
    checks["E_integral_alternating"] = alt and is_integral(E)
    if not checks["E_integral_alternating"]:
        msgs["E_integral_alternating"] = "E is not alternating" if not alt else "E is not integral"
    checks["J_invariant"] = matrices_equal(J.T @ E @ J, E)
    if not checks["J_invariant"]:
        msgs["J_invariant"] = "E(Jx, Jy) != E(x, y)"
    S = E @ J
    if not matrices_equal(S, S.T):
        checks["positive"] = False
        msgs["positive"] = "E(x, Jy) is not symmetric"
    else:
        checks["positive"] = is_positive_definite(S)
        if not checks["positive"]:
            msgs["positive"] = "E(x, Jx) is not positive definite"
    return ValidationReport(checks, msgs)


def kahler_form(A: PolarizedAbelianVariety) -> KForm:
    """The 2-form with ``omega(e_i, e_j) = E(e_i, e_j)``."""
    return from_skew_matrix(A.E)


def normalized(A: PolarizedAbelianVariety) -> PolarizedAbelianVariety:
    """The same variety written in a quasi-symplectic basis of the lattice."""
    U, _ = skew_normal_form(A.E)
    return PolarizedAbelianVariety(inverse(U) @ A.J @ U, U.T @ A.E @ U, A.label, A.d)


def elementary_divisors(A: PolarizedAbelianVariety) -> list:
    return skew_normal_form(A.E)[1]


def complex_frame(J) -> list:
    """Indices i such that {e_i, J e_i} over the chosen i form a real basis."""
    J = np.asarray(J)
    n2 = J.shape[0]
    chosen, vecs = [], []
    for i in range(n2):
        ei = identity(n2)[:, i]
        cand = vecs + [ei, J @ ei]
        if rank(as_matrix(cand)) == len(cand):
            chosen.append(i)
            vecs = cand
        if len(vecs) == n2:
            break
    return chosen


def hermitian_form(A: PolarizedAbelianVariety) -> np.ndarray:
    """Matrix of ``H(x, y) = E(x, Jy) - i E(x, y)`` on a J-adapted complex basis."""
    idx = complex_frame(A.J)
    n = len(idx)
    H = np.empty((n, n), dtype=object)
    S = A.E @ A.J
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            H[a, b] = S[i, j] - I * A.E[i, j]
    return H


# --------------------------------------------------------------------------
# bidegree


def derivation_matrix(J, k: int) -> np.ndarray:
    """J^* extended to k-forms as a derivation, on ascending-mask coordinates.

    It acts on the (a, b) part by multiplication with i(a - b).
    """
    J = np.asarray(J)
    dim = J.shape[0]
    masks = basis_masks(dim, k)
    index = basis_index(dim, k)
    D = zeros(len(masks), len(masks))
    for col, m in enumerate(masks):
        for r, i in enumerate(bits(m)):
            t = m ^ (1 << i)
            for j in range(dim):
                x = J[i, j]
                if x == 0 or t >> j & 1:
                    continue
                s = merge_sign(1 << j, t) * (-1 if r & 1 else 1)
                row = index[t | (1 << j)]
                D[row, col] = D[row, col] + (x if s > 0 else -x)
    return D


def apply_derivation(J, u: KForm) -> KForm:
    D = derivation_matrix(J, u.degree)
    return KForm.from_vector(u.dim, u.degree, D @ u.to_vector())


def _holomorphic_coframe(J):
    """(1,0) and (0,1) projections of each dx^i: (I -+ i J^T)/2 applied to dx^i."""
    J = np.asarray(J)
    dim = J.shape[0]
    half = scalar(1) / 2
    theta, theta_bar = [], []
    for i in range(dim):
        t, tb = {}, {}
        for j in range(dim):
            delta = ONE if i == j else ZERO
            t[1 << j] = half * (delta - I * J[i, j])
            tb[1 << j] = half * (delta + I * J[i, j])
        theta.append(KForm(dim, 1, t))
        theta_bar.append(KForm(dim, 1, tb))
    return theta, theta_bar


def bidegree_component(A_or_J, u: KForm, ab) -> KForm:
    """The (a, b) component of ``u`` over Q(sqrt d)(i).

    Each ``dx^i`` splits as its (1,0) plus (0,1) projection and the split is
    expanded multiplicatively, keeping products with exactly ``a`` factors of
    type (1,0).
    """
    J = A_or_J.J if isinstance(A_or_J, PolarizedAbelianVariety) else np.asarray(A_or_J)
    a, b = ab
    if a + b != u.degree:
        raise ValueError("a + b must equal the degree")
    if a < 0 or b < 0:
        return KForm.zero(u.dim, u.degree)
    theta, theta_bar = _holomorphic_coframe(J)
    out = KForm.zero(u.dim, u.degree)
    for m, c in u.terms.items():
        states = {0: KForm.scalar(u.dim, c)}
        for r, i in enumerate(bits(m)):
            nxt: dict = {}
            for cnt, part in states.items():
                if cnt + 1 <= a:
                    f = wedge(part, theta[i])
                    nxt[cnt + 1] = nxt[cnt + 1] + f if cnt + 1 in nxt else f
                if r + 1 - cnt <= b:
                    f = wedge(part, theta_bar[i])
                    nxt[cnt] = nxt[cnt] + f if cnt in nxt else f
            states = nxt
        if a in states:
            out = out + states[a]
    out.degree = u.degree
    return out


def bidegree_projector_matrix(A_or_J, k: int, ab) -> np.ndarray:
    J = A_or_J.J if isinstance(A_or_J, PolarizedAbelianVariety) else np.asarray(A_or_J)
    dim = J.shape[0]
    cols = [bidegree_component(J, KForm(dim, k, {m: ONE}), ab).to_vector() for m in basis_masks(dim, k)]
    if not cols:
        return zeros(0, 0)
    return np.array(cols, dtype=object).T


@dataclass
class HodgeBasis:
    k: int
    classes: list
    dim: int
    method: str = "derivation"

    def matrix(self) -> np.ndarray:
        if not self.classes:
            return zeros(0, len(basis_masks(self.ambient, 2 * self.k)))
        return np.array([c.to_vector() for c in self.classes], dtype=object)

    @property
    def ambient(self) -> int:
        return self.classes[0].dim if self.classes else 0


def hodge_classes_of_structure(J, k: int, method: str = "derivation") -> HodgeBasis:
    """Q-basis of rational 2k-forms whose only bidegree component is (k, k)."""
    J = np.asarray(J)
    dim = J.shape[0]
    n = dim // 2
    deg = 2 * k
    if k == 0:
        return HodgeBasis(0, [KForm.scalar(dim)], 1, method)
    if method == "derivation":
        K = kernel_basis(derivation_matrix(J, deg))
    elif method == "projector":
        blocks = [
            bidegree_projector_matrix(J, deg, (a, deg - a))
            for a in range(max(0, deg - n), min(deg, n) + 1)
            if a != k
        ]
        if blocks:
            K = kernel_basis(np.concatenate(blocks, axis=0))
        else:
            K = identity(len(basis_masks(dim, deg)))
    else:
        raise ValueError(f"unknown method {method!r}")
    if any(isinstance(x, Scalar) for x in K.ravel()):
        K = rational_points(K)
    classes = [KForm.from_vector(dim, deg, row) for row in K]
    return HodgeBasis(k, classes, len(classes), method)


def rational_hodge_classes(A: PolarizedAbelianVariety, k: int, method: str = "derivation") -> HodgeBasis:
    if not 0 <= k <= A.n:
        raise ValueError(f"k must lie in 0..{A.n}")
    return A.cached(("hodge", k, method), lambda: hodge_classes_of_structure(A.J, k, method))


def is_hodge_class(J, u: KForm) -> bool:
    """Rational coefficients and no bidegree component other than (k, k)."""
    if u.degree % 2 or any(isinstance(c, Scalar) for c in u.terms.values()):
        return False
    return apply_derivation(J, u).is_zero()


def lefschetz_matrix(A: PolarizedAbelianVariety, p: int) -> np.ndarray:
    """Columns: ``dx^j ^ omega^((p-1)/2)`` in the degree-p basis."""
    if p % 2 == 0:
        raise ValueError("p must be odd")
    Lp = power(kahler_form(A), (p - 1) // 2)
    cols = [wedge(KForm.basis(A.dim, (j,)), Lp).to_vector() for j in range(1, A.dim + 1)]
    return np.array(cols, dtype=object).T


def lefschetz_rank(A: PolarizedAbelianVariety, p: int) -> int:
    if not 0 < p < A.dim:
        raise ValueError("need 0 < p < 2n")
    return rank(lefschetz_matrix(A, p))


@dataclass
class FormSpan:
    """Subspace of k-forms on a fixed ambient, kept as a reduced echelon basis."""

    dim_ambient: int
    degree: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def contains(self, u: KForm) -> bool:
        return in_span(self.basis, u.to_vector())

    def forms(self) -> list:
        return [KForm.from_vector(self.dim_ambient, self.degree, row) for row in self.basis]

    @classmethod
    def of(cls, forms, dim_ambient: int, degree: int):
        vecs = [f.to_vector() for f in forms]
        width = len(basis_masks(dim_ambient, degree))
        return cls(dim_ambient, degree, row_basis(vecs, width) if vecs else zeros(0, width))


def divisor_power_span(A: PolarizedAbelianVariety, m: int) -> FormSpan:
    """Span of all m-fold products of rational (1,1) classes."""
    if not 0 <= m <= A.n:
        raise ValueError(f"m must lie in 0..{A.n}")

    def build():
        if m == 0:
            return FormSpan.of([KForm.scalar(A.dim)], A.dim, 0)
        h11 = rational_hodge_classes(A, 1).classes
        prods = []
        for combo in combinations_with_replacement(range(len(h11)), m):
            f = KForm.scalar(A.dim)
            for i in combo:
                f = wedge(f, h11[i])
            prods.append(f)
        return FormSpan.of(prods, A.dim, 2 * m)

    return A.cached(("divisor_span", m), build)


# --------------------------------------------------------------------------
# catalog


def block_diagonal(*blocks) -> np.ndarray:
    size = sum(np.asarray(b).shape[0] for b in blocks)
    out = zeros(size, size)
    at = 0
    for b in blocks:
        b = np.asarray(b)
        k = b.shape[0]
        out[at : at + k, at : at + k] = b
        at += k
    return out


def product(*varieties, label: str = "") -> PolarizedAbelianVariety:
    return PolarizedAbelianVariety(
        block_diagonal(*(v.J for v in varieties)),
        block_diagonal(*(v.E for v in varieties)),
        label or "x".join(v.label for v in varieties),
    )


def gaussian_curve() -> PolarizedAbelianVariety:
    """C / Z[i] with its principal polarization."""
    return PolarizedAbelianVariety([[0, -1], [1, 0]], [[0, 1], [-1, 0]], "A1")


def sqrt2_curve() -> PolarizedAbelianVariety:
    """C / (Z + i sqrt(2) Z); J sends 1 to i = tau / sqrt 2 and tau to -sqrt 2."""
    r = sqrt(2)
    return PolarizedAbelianVariety([[0, -r], [r / 2, 0]], [[0, 1], [-1, 0]], "E_isqrt2", d=2)


def _b2() -> PolarizedAbelianVariety:
    # product polarization of type (1, 2) on E_i x E_i, then a unimodular base change
    E0 = as_matrix([[0, 0, 1, 0], [0, 0, 0, 2], [-1, 0, 0, 0], [0, -2, 0, 0]])
    J0 = as_matrix([[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])
    G = as_matrix([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 1, 1, 1]])
    return PolarizedAbelianVariety(inverse(G) @ J0 @ G, G.T @ E0 @ G, "B2")


def power_of_curve(n: int) -> PolarizedAbelianVariety:
    return product(*([gaussian_curve()] * n), label=f"A{n}")


CATALOG = {
    "A1": gaussian_curve,
    "A2": lambda: power_of_curve(2),
    "A3": lambda: power_of_curve(3),
    "B2": _b2,
    "S_sqrt2": lambda: product(sqrt2_curve(), gaussian_curve(), label="S_sqrt2"),
}


def catalog_labels() -> list:
    return list(CATALOG)


def from_catalog(label: str) -> PolarizedAbelianVariety:
    """Catalog entry by label; ``A<n>`` also resolves to the n-th power of A1."""
    if label in CATALOG:
        return CATALOG[label]()
    if label[:1] == "A" and label[1:].isdigit() and 1 <= int(label[1:]) <= 8:
        return power_of_curve(int(label[1:]))
    raise UnknownLabel(f"no catalog entry named {label!r}")
