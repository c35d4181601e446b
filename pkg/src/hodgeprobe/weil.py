"""Higher Weil Jacobians, Sampson's projection and the form calculus of a surjection.

For an odd p the p-th exterior power of (V, L, J, E) is again a polarized
torus.  The projection onto A is fixed by requiring its pullback on 1-forms
to be wedging with ``omega^((p-1)/2)`` under the identification
``dx^I <-> dx^{i_1} ^ ... ^ dx^{i_p}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .abelian import PolarizedAbelianVariety, kahler_form, validate
from .errors import (
    DegreeMismatch,
    DegreeTooLow,
    EvenP,
    InvariantViolation,
    NotComplexLinear,
    NotIntegral,
    NotSurjective,
    PropertyFailure,
)
from .exact_linalg import (
    ZERO,
    as_matrix,
    det,
    format_matrix,
    integer_kernel,
    inverse,
    is_integral,
    lattice_index,
    matrices_equal,
    rank,
    sign,
    solve,
)
from .exterior import (
    KForm,
    basis_index,
    basis_masks,
    bits,
    gram_extension,
    induced_power_map,
    interior,
    merge_sign,
    power,
    pullback_form,
    square_pullback_coefficients,
    wedge,
)


@dataclass
class WeilJacobian:
    base: PolarizedAbelianVariety
    p: int
    J_hat: np.ndarray
    E_hat: np.ndarray

    @property
    def N(self) -> int:
        return self.J_hat.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.J_hat.shape[0]

    def as_variety(self) -> PolarizedAbelianVariety:
        if not hasattr(self, "_variety"):
            self._variety = PolarizedAbelianVariety(
                self.J_hat, self.E_hat, f"J{self.p}({self.base.label})", self.base.d
            )
        return self._variety

    def polarization_form(self) -> KForm:
        return kahler_form(self.as_variety())

    def to_dict(self) -> dict:
        return {
            "base": self.base.label,
            "p": self.p,
            "N": self.N,
            "J_hat": format_matrix(self.J_hat),
            "E_hat": format_matrix(self.E_hat),
        }


_AXIOM_NAMES = {
    "J_squared": "J_hat^2 = -I",
    "E_integral_alternating": "E_hat integral alternating",
    "J_invariant": "E_hat(J_hat x, J_hat y) = E_hat(x, y)",
    "positive": "E_hat(x, J_hat x) positive definite",
}


def build_weil_jacobian(A: PolarizedAbelianVariety, p: int) -> WeilJacobian:
    if p % 2 == 0:
        raise EvenP(f"p = {p} is even")
    if not 0 < p < A.dim:
        raise ValueError(f"need 0 < p < {A.dim}")
    W = WeilJacobian(A, p, induced_power_map(A.J, p), gram_extension(A.E, p))
    report = validate(W.as_variety())
    for key, ok in report.checks.items():
        if not ok:
            raise InvariantViolation(_AXIOM_NAMES[key], report.messages.get(key, ""))
    return W


def weil_axioms(W: WeilJacobian) -> dict:
    return {(_AXIOM_NAMES[k]): v for k, v in validate(W.as_variety()).checks.items()}


# --------------------------------------------------------------------------
# surjections


@dataclass
class SurjectionData:
    """A surjective, lattice-preserving, complex-linear map of tori.

    ``kernel_frame`` rows are a saturated integral basis of ker(matrix),
    ordered so that its orientation matches the complex orientation.
    """

    source: PolarizedAbelianVariety
    target: PolarizedAbelianVariety
    matrix: np.ndarray
    kernel_frame: np.ndarray
    lattice_index: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def source_J(self):
        return self.source.J

    @property
    def target_J(self):
        return self.target.J

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def N(self) -> int:
        return self.source_dim // 2

    @property
    def n(self) -> int:
        return self.target_dim // 2

    @property
    def fiber_dim(self) -> int:
        return self.source_dim - self.target_dim

    def default_lift(self) -> np.ndarray:
        """The right inverse ``pi^T (pi pi^T)^{-1}``."""
        if "lift" not in self._cache:
            P = self.matrix
            self._cache["lift"] = P.T @ inverse(P @ P.T)
        return self._cache["lift"]

    def adapted_basis(self, lift=None):
        """(B, B^{-1}, det B) for B = [kernel frame | lift columns]."""
        key = ("adapted", None if lift is None else id(lift))
        if lift is None and key in self._cache:
            return self._cache[key]
        s = self.default_lift() if lift is None else np.asarray(lift)
        B = np.concatenate([self.kernel_frame.T, s], axis=1) if self.fiber_dim else s.copy()
        out = (B, inverse(B), det(B))
        if lift is None:
            self._cache[key] = out
        return out

    def to_dict(self) -> dict:
        return {
            "source": self.source.label,
            "target": self.target.label,
            "source_dim": self.source_dim,
            "target_dim": self.target_dim,
            "matrix": format_matrix(self.matrix),
            "kernel_frame": format_matrix(self.kernel_frame),
            "lattice_index": self.lattice_index,
        }


def surjection_properties(source_J, target_J, P) -> dict:
    P = np.asarray(P)
    return {
        "integral": is_integral(P),
        "surjective": rank(P) == P.shape[0],
        "complex_linear": matrices_equal(P @ source_J, target_J @ P),
    }


def complex_adapted_basis(J, frame) -> np.ndarray:
    """Columns u_1, J u_1, u_2, J u_2, ... chosen greedily from ``frame`` rows."""
    cols = []
    for f in frame:
        cand = cols + [f, J @ f]
        if rank(as_matrix(cand)) == len(cand):
            cols = cand
        if len(cols) == len(frame):
            break
    return as_matrix(cols).T if cols else np.empty((J.shape[0], 0), dtype=object)


def oriented_kernel_frame(P, J) -> np.ndarray:
    frame = integer_kernel(P)
    if frame.shape[0] == 0:
        return frame
    adapted = complex_adapted_basis(J, list(frame))
    if adapted.shape[1] != frame.shape[0]:
        raise NotComplexLinear("kernel is not a complex subspace")
    T = solve(adapted, frame.T)
    if sign(det(T)) < 0:
        frame = frame.copy()
        frame[-1] = -frame[-1]
    return frame


def _surjection(source, target, P, error_for) -> SurjectionData:
    P = as_matrix(P)
    if P.shape != (target.dim, source.dim):
        raise ValueError(f"matrix must be {target.dim} x {source.dim}")
    props = surjection_properties(source.J, target.J, P)
    for key in ("integral", "surjective", "complex_linear"):
        if not props[key]:
            raise error_for(key)
    frame = oriented_kernel_frame(P, source.J)
    return SurjectionData(source, target, P, frame, lattice_index(P))


def custom_surjection(source: PolarizedAbelianVariety, target: PolarizedAbelianVariety, matrix) -> SurjectionData:
    errors = {
        "integral": NotIntegral("matrix is not integral"),
        "surjective": NotSurjective("matrix does not have full row rank"),
        "complex_linear": NotComplexLinear("matrix does not intertwine the complex structures"),
    }
    return _surjection(source, target, matrix, errors.__getitem__)


def sampson_matrix(A: PolarizedAbelianVariety, p: int) -> np.ndarray:
    """Column I, row j: coefficient of dx^I in dx^j ^ omega^((p-1)/2)."""
    Lp = power(kahler_form(A), (p - 1) // 2)
    index = basis_index(A.dim, p)
    P = np.full((A.dim, len(index)), ZERO, dtype=object)
    for j in range(A.dim):
        for m, c in wedge(KForm.basis(A.dim, (j + 1,)), Lp).items():
            P[j, index[m]] = c
    return P


def contraction_matrix(A: PolarizedAbelianVariety, p: int) -> np.ndarray:
    """Row j: contraction of omega^((p+1)/2) with the E-dual of dx^j, read through psi."""
    top = power(kahler_form(A), (p + 1) // 2)
    duals = -inverse(A.E)
    index = basis_index(A.dim, p)
    P = np.full((A.dim, len(index)), ZERO, dtype=object)
    for j in range(A.dim):
        for m, c in interior(list(duals[:, j]), top).items():
            P[j, index[m]] = c
    return P


def sampson_projection(W: WeilJacobian) -> SurjectionData:
    def fail(key):
        return PropertyFailure(key, "Sampson projection failed a defining property")

    return _surjection(W.as_variety(), W.base, sampson_matrix(W.base, W.p), fail)


def identity_surjection(A: PolarizedAbelianVariety) -> SurjectionData:
    return custom_surjection(A, A, np.eye(A.dim, dtype=int).tolist())


# --------------------------------------------------------------------------
# forms


def psi(u: KForm, dim: int, p: int) -> KForm:
    """1-form on the p-th exterior power to p-form on V: ``dx^I -> wedge dx^i``."""
    if u.degree != 1:
        raise DegreeMismatch("psi takes 1-forms")
    masks = basis_masks(dim, p)
    if u.dim != len(masks):
        raise DegreeMismatch("ambient does not match C(dim, p)")
    return KForm(dim, p, {masks[next(bits(m))]: c for m, c in u.items()})


def psi_inverse(u: KForm) -> KForm:
    index = basis_index(u.dim, u.degree)
    return KForm(len(index), 1, {1 << index[m]: c for m, c in u.items()})


def pullback(pi: SurjectionData, u: KForm) -> KForm:
    return pullback_form(pi.matrix, u)


def pushforward(pi: SurjectionData, eta: KForm, lift=None) -> KForm:
    """Integration along the fibres of ``pi`` on invariant forms.

    ``(pi_* eta)(v_1, ...) = eta(w_1, ..., w_2r, s v_1, ...)`` with ``w`` the
    oriented kernel frame and ``s`` any right inverse of ``pi``.
    """
    r2 = pi.fiber_dim
    if eta.dim != pi.source_dim:
        raise DegreeMismatch("form is not on the source torus")
    if eta.degree < r2:
        raise DegreeTooLow(f"degree {eta.degree} below fibre dimension {r2}")
    m = eta.degree - r2
    B, B_inv, det_B = pi.adapted_basis(lift)
    wmask = (1 << r2) - 1
    targets = basis_masks(pi.target_dim, m)
    coeffs = square_pullback_coefficients(eta, B, B_inv, det_B, [wmask | (t << r2) for t in targets])
    return KForm(pi.target_dim, m, {m_ >> r2: c for m_, c in coeffs.items()})


def f_map(W: WeilJacobian, eta: KForm) -> KForm:
    """2-form on the p-th exterior power to 2p-form on V, dual to the shuffle coproduct."""
    if eta.degree != 2:
        raise DegreeMismatch("f takes 2-forms")
    masks = basis_masks(W.base.dim, W.p)
    out: dict = {}
    for m, c in eta.items():
        a, b = bits(m)
        I_, J_ = masks[a], masks[b]
        if I_ & J_:
            continue
        k = I_ | J_
        out[k] = out.get(k, ZERO) + (c if merge_sign(I_, J_) > 0 else -c)
    return KForm(W.base.dim, 2 * W.p, out)


def g_map(W: WeilJacobian, beta: KForm) -> KForm:
    """2p-form on V to the 2-form ``(xi, zeta) -> beta(xi ^ zeta)``."""
    p = W.p
    if p % 2 == 0:
        raise EvenP(f"p = {p} is even")
    if beta.degree != 2 * p:
        raise DegreeMismatch(f"expected degree {2 * p}")
    index = basis_index(W.base.dim, p)
    out: dict = {}
    for k, c in beta.items():
        pos = list(bits(k))
        for first in combinations(pos, p):
            im = 0
            for b in first:
                im |= 1 << b
            jm = k ^ im
            a, b = index[im], index[jm]
            if a > b:
                continue
            key = (1 << a) | (1 << b)
            out[key] = out.get(key, ZERO) + (c if merge_sign(im, jm) > 0 else -c)
    return KForm(len(index), 2, out)
