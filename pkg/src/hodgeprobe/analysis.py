"""Exact checks of the dimension bound and containment for pushforwards of
``omega_hat^(N-q-1) ^ D`` along a surjection of abelian varieties.

Two independent routes compute the image of a rational (1,1) class D:

* ``direct`` reads the needed coefficients of ``omega_hat^k ^ D`` in
  coordinates adapted to the kernel, using ``omega^k|_S = k! Pf(Omega[S, S])``;
* ``two_term`` splits ``omega_hat = omega_1 + pi^* alpha`` and uses the closed
  expansion ``c1 * Y * alpha^(n-q) + c2 * alpha^(n-q-1) ^ X``.

``naive`` expands powers and wedges literally and serves as a reference on
small cases.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from itertools import combinations, combinations_with_replacement, product as iproduct
from math import comb, factorial

import numpy as np

from .abelian import (
    divisor_power_span,
    is_hodge_class,
    kahler_form,
    rational_hodge_classes,
)
from .errors import BudgetExceeded, DegenerateCase, DegenerateSplit
from .exact_linalg import (
    ONE,
    ZERO,
    identity,
    in_span,
    inverse,
    is_positive_definite,
    kernel_basis,
    matrices_equal,
    pfaffian,
    rank,
    row_basis,
    saturate,
    zeros,
)
from .exterior import (
    KForm,
    basis_masks,
    bits,
    from_skew_matrix,
    merge_sign,
    power,
    to_skew_matrix,
    wedge,
)
from .weil import SurjectionData, WeilJacobian, g_map, pullback, pushforward

DEFAULT_TERM_CAP = 10**8


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("HODGEPROBE_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``map`` that may fan out to processes; results stay in input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# anisotropy


def pairing_matrix(omega_hat: KForm, J) -> np.ndarray:
    """Symmetric matrix of ``(u, v) -> (omega(u, Jv) + omega(v, Ju)) / 2``."""
    G = to_skew_matrix(omega_hat) @ np.asarray(J)
    return (G + G.T) * (ONE / 2)


def anisotropy_check(omega_hat: KForm, J) -> bool:
    G = pairing_matrix(omega_hat, J)
    return is_positive_definite(G) or is_positive_definite(-G)


def make_anisotropic(omega_hat: KForm, omega0: KForm, J, max_doublings: int = 256):
    """Smallest t in 1, 2, 4, ... with ``omega_hat + t omega0`` anisotropic."""
    t = 1
    for _ in range(max_doublings):
        candidate = omega_hat + omega0 * t
        if anisotropy_check(candidate, J):
            return t, candidate
        t *= 2
    raise DegenerateCase("omega0 does not dominate within the doubling limit")


# --------------------------------------------------------------------------
# splitting


@dataclass
class SplitPolarization:
    omega_hat: KForm
    W_basis: np.ndarray
    Wperp_basis: np.ndarray
    omega1: KForm
    alpha: KForm
    lift_perp: np.ndarray
    adapted: np.ndarray

    @property
    def fiber_dim(self) -> int:
        return self.W_basis.shape[0]

    def checks(self, pi: SurjectionData) -> dict:
        r2 = self.fiber_dim
        A = self.adapted
        full = np.concatenate([self.W_basis, self.Wperp_basis], axis=0)
        return {
            "direct_sum": rank(full) == pi.source_dim,
            "no_cross_terms": all(A[i, j] == 0 for i in range(r2) for j in range(r2, A.shape[0])),
            "reconstruction": self.omega_hat == self.omega1 + pullback(pi, self.alpha),
            "omega1_rational_11": is_hodge_class(pi.source_J, self.omega1),
            "alpha_rational_11": is_hodge_class(pi.target_J, self.alpha),
        }


def split_omega(pi: SurjectionData, omega_hat: KForm) -> SplitPolarization:
    Om = to_skew_matrix(omega_hat)
    F = pi.kernel_frame
    dim = pi.source_dim
    if F.shape[0] == 0:
        Wperp = identity(dim)
    else:
        K = kernel_basis(F @ Om)
        if K.shape[0] != pi.target_dim:
            raise DegenerateSplit("orthogonal complement has the wrong dimension")
        Wperp = saturate(K, dim)
    if rank(np.concatenate([F, Wperp], axis=0)) != dim:
        raise DegenerateSplit("kernel meets its orthogonal complement")
    # s_perp: the lift of the target into W_perp
    Wp = Wperp.T
    s_perp = Wp @ inverse(pi.matrix @ Wp)
    alpha = from_skew_matrix(s_perp.T @ Om @ s_perp)
    P_W = identity(dim) - s_perp @ pi.matrix
    omega1 = from_skew_matrix(P_W.T @ Om @ P_W)
    B = np.concatenate([F.T, s_perp], axis=1)
    return SplitPolarization(omega_hat, F, Wperp, omega1, alpha, s_perp, B.T @ Om @ B)


# --------------------------------------------------------------------------
# images of the pushforward map


def direct_estimate(pi: SurjectionData, q: int) -> int:
    """Term count of ``omega_hat^(N-q-1)`` on the source, the cost a literal expansion pays."""
    k = pi.N - q - 1
    return comb(pi.source_dim, 2 * k) if k >= 0 else 0


def binomial_constants(N: int, n: int, q: int) -> tuple:
    k = N - q - 1
    c1 = comb(k, n - q) if n - q >= 0 else 0
    c2 = comb(k, n - q - 1) if n - q - 1 >= 0 else 0
    return c1, c2


@dataclass
class PushforwardImage:
    matrix: np.ndarray
    image_dim: int
    strategy: str
    estimate: int
    target_degree: int

    def __iter__(self):
        yield self.matrix
        yield self.image_dim

    def rows(self, dim: int) -> list:
        return [KForm.from_vector(dim, self.target_degree, r) for r in self.matrix]


def _check_q(pi: SurjectionData, q: int) -> int:
    if not 1 <= q <= pi.n:
        raise ValueError(f"q must lie in 1..{pi.n}")
    k = pi.N - q - 1
    if k < 0:
        raise DegenerateCase(f"power N - q - 1 = {k} is negative")
    return k


def _direct_kernel(pi: SurjectionData, omega_hat: KForm, k: int, m: int):
    """Linear functionals D' -> coefficient of omega^k ^ D on each target mask."""
    B = pi.adapted_basis()[0]
    M = B.T @ to_skew_matrix(omega_hat) @ B
    r2 = pi.fiber_dim
    wmask = (1 << r2) - 1
    fk = factorial(k)
    table = []
    for U in basis_masks(pi.target_dim, m):
        S = wmask | (U << r2)
        idx = list(bits(S))
        entries = []
        for a, b in combinations(idx, 2):
            ab = (1 << a) | (1 << b)
            rest = [i for i in idx if i != a and i != b]
            pf = pfaffian(M[np.ix_(rest, rest)]) if rest else ONE
            if pf != 0:
                entries.append((a, b, merge_sign(ab, S ^ ab) * fk * pf))
        table.append(entries)
    return B, table


def _direct_row(B, table, D: KForm) -> list:
    Dp = B.T @ to_skew_matrix(D) @ B
    row = []
    for entries in table:
        total = ZERO
        for a, b, c in entries:
            x = Dp[a, b]
            if x != 0:
                total = total + c * x
        row.append(total)
    return row


def _two_term_row(ctx, D: KForm) -> list:
    B, r2, PfW, OmW_inv, alpha_pows, c1, c2, n, q, tdim = ctx
    Dp = B.T @ to_skew_matrix(D) @ B
    r = r2 // 2
    out = KForm.zero(tdim, 2 * (n - q))
    if c2:
        X = from_skew_matrix(Dp[r2:, r2:]) * (factorial(r) * PfW)
        out = out + wedge(alpha_pows[n - q - 1], X) * c2
    if c1 and r:
        tr = ZERO
        for i in range(r2):
            for j in range(r2):
                if OmW_inv[i, j] != 0 and Dp[j, i] != 0:
                    tr = tr + OmW_inv[i, j] * Dp[j, i]
        Y = factorial(r - 1) * PfW * tr / 2
        out = out + alpha_pows[n - q] * (c1 * Y)
    return list(out.to_vector())


def _naive_row(pi, Lk, D: KForm) -> list:
    return list(pushforward(pi, wedge(Lk, D)).to_vector())


def image_of_pushforward_map(
    pi: SurjectionData,
    omega_hat: KForm,
    q: int,
    strategy: str = "direct",
    classes=None,
    budget: int = DEFAULT_TERM_CAP,
    split: SplitPolarization | None = None,
) -> PushforwardImage:
    k = _check_q(pi, q)
    m = 2 * (pi.n - q)
    if classes is None:
        classes = rational_hodge_classes(pi.source, 1).classes
    estimate = direct_estimate(pi, q)
    if strategy == "auto":
        strategy = "direct" if estimate <= budget else "two_term"
    if strategy in ("direct", "naive") and estimate > budget:
        raise BudgetExceeded(estimate, budget)
    if strategy == "direct":
        B, table = _direct_kernel(pi, omega_hat, k, m)
        fn = partial(_direct_row, B, table)
    elif strategy == "naive":
        fn = partial(_naive_row, pi, power(omega_hat, k))
    elif strategy == "two_term":
        split = split or split_omega(pi, omega_hat)
        r2 = pi.fiber_dim
        B = np.concatenate([split.W_basis.T, split.lift_perp], axis=1)
        OmW = split.adapted[:r2, :r2]
        PfW = pfaffian(OmW) if r2 else ONE
        OmW_inv = inverse(OmW) if r2 else zeros(0, 0)
        alpha_pows = [KForm.scalar(pi.target_dim)]
        for _ in range(pi.n - q):
            alpha_pows.append(wedge(alpha_pows[-1], split.alpha))
        c1, c2 = binomial_constants(pi.N, pi.n, q)
        ctx = (B, r2, PfW, OmW_inv, alpha_pows, c1, c2, pi.n, q, pi.target_dim)
        fn = partial(_two_term_row, ctx)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    rows = ordered_map(fn, classes)
    width = len(basis_masks(pi.target_dim, m))
    matrix = np.array(rows, dtype=object).reshape(len(rows), width)
    return PushforwardImage(matrix, rank(matrix) if len(rows) else 0, strategy, estimate, m)


def two_term_expansion_check(pi: SurjectionData, split: SplitPolarization, q: int, D: KForm):
    """Compare the closed two-term expansion with a direct computation for one class D.

    Returns (holds, c1, c2, residual form).
    """
    c1, c2 = binomial_constants(pi.N, pi.n, q)
    lhs = image_of_pushforward_map(pi, split.omega_hat, q, "direct", [D], budget=10**18)
    rhs = image_of_pushforward_map(pi, split.omega_hat, q, "two_term", [D], split=split)
    residual = KForm.from_vector(pi.target_dim, lhs.target_degree, lhs.matrix[0] - rhs.matrix[0])
    return residual.is_zero(), c1, c2, residual


# --------------------------------------------------------------------------
# containment


def _rows_in_span(rows, basis) -> bool:
    return all(in_span(basis, r) for r in rows)


def sharper_span(pi: SurjectionData, alpha: KForm, q: int) -> np.ndarray | None:
    """Basis of ``alpha^(n-q-1) ^ H^{1,1}_Q(A)`` (None when q = n)."""
    if q == pi.n:
        return None
    a = power(alpha, pi.n - q - 1)
    h11 = rational_hodge_classes(pi.target, 1).classes
    width = len(basis_masks(pi.target_dim, 2 * (pi.n - q)))
    return row_basis([wedge(a, h).to_vector() for h in h11], width)


def containment_details(pi, omega_hat, q, image: PushforwardImage | None = None, split=None) -> dict:
    if image is None:
        image = image_of_pushforward_map(pi, omega_hat, q, "auto")
    span = divisor_power_span(pi.target, pi.n - q)
    main = _rows_in_span(image.matrix, span.basis)
    sharper = None
    if split is None and anisotropy_check(omega_hat, pi.source_J):
        try:
            split = split_omega(pi, omega_hat)
        except DegenerateSplit:
            split = None
    if split is not None:
        basis = sharper_span(pi, split.alpha, q)
        if basis is not None:
            sharper = _rows_in_span(image.matrix, basis)
    return {"main": main, "sharper": sharper}


def containment_check(pi, omega_hat, q, image=None, split=None) -> bool:
    d = containment_details(pi, omega_hat, q, image, split)
    return d["main"] and d["sharper"] is not False


# --------------------------------------------------------------------------
# reports


@dataclass
class Theorem1Report:
    q: int
    N: int
    n: int
    image_dim: int
    h11_target: int
    h11_source: int
    bound_holds: bool
    containment_holds: bool
    sharper_containment: bool | None
    two_term_identity_holds: bool | None
    c1: int
    c2: int
    surjective_onto_hodge: bool
    injective: bool
    hodge_dim_target: int
    hodge_dim_source_degree: int
    divisor_span_dim: int
    anisotropic: bool
    strategy: str
    expansion_dependent: bool
    estimate: int

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def invariant_failures(self) -> list:
        bad = []
        if self.anisotropic and not self.bound_holds:
            bad.append("bound")
        if not self.containment_holds:
            bad.append("containment")
        if self.two_term_identity_holds is False:
            bad.append("two_term")
        if self.divisor_span_dim < self.hodge_dim_target and (self.surjective_onto_hodge or self.injective):
            bad.append("non_surjectivity")
        return bad


def theorem1(
    pi: SurjectionData,
    omega_hat: KForm,
    q: int,
    strategy: str = "auto",
    budget: int = DEFAULT_TERM_CAP,
    cross_check: bool = True,
) -> Theorem1Report:
    """Image dimension, bound, containment and the two-term identity for one q.

    ``injective`` concerns any map ``H^{q,q}_Q(A) -> H^{n-q,n-q}_Q(A)`` whose
    image lies in the computed image; with equal dimensions it is injective
    exactly when it is surjective.
    """
    _check_q(pi, q)
    anis = anisotropy_check(omega_hat, pi.source_J)
    split = None
    if anis:
        try:
            split = split_omega(pi, omega_hat)
        except DegenerateSplit:
            split = None
    estimate = direct_estimate(pi, q)
    if strategy == "auto":
        strategy = "direct" if estimate <= budget else "two_term"
    if strategy == "two_term" and split is None:
        raise DegenerateSplit("two_term needs an anisotropic omega_hat")
    image = image_of_pushforward_map(pi, omega_hat, q, strategy, budget=budget, split=split)
    identity_holds = None
    direct_ran = strategy == "direct"
    if cross_check and split is not None:
        other = "two_term" if strategy == "direct" else "direct"
        if other == "two_term" or estimate <= budget:
            alt = image_of_pushforward_map(pi, omega_hat, q, other, budget=budget, split=split)
            identity_holds = matrices_equal(image.matrix, alt.matrix)
            direct_ran = True
    details = containment_details(pi, omega_hat, q, image, split)
    c1, c2 = binomial_constants(pi.N, pi.n, q)
    h11_t = rational_hodge_classes(pi.target, 1).dim
    hodge_t = rational_hodge_classes(pi.target, pi.n - q).dim
    hodge_q = rational_hodge_classes(pi.target, q).dim
    span_dim = divisor_power_span(pi.target, pi.n - q).dim
    surjective = image.image_dim == hodge_t and details["main"]
    return Theorem1Report(
        q=q,
        N=pi.N,
        n=pi.n,
        image_dim=image.image_dim,
        h11_target=h11_t,
        h11_source=image.matrix.shape[0],
        bound_holds=image.image_dim <= h11_t,
        containment_holds=details["main"] and details["sharper"] is not False,
        sharper_containment=details["sharper"],
        two_term_identity_holds=identity_holds,
        c1=c1,
        c2=c2,
        surjective_onto_hodge=surjective,
        injective=surjective and hodge_q == hodge_t,
        hodge_dim_target=hodge_t,
        hodge_dim_source_degree=hodge_q,
        divisor_span_dim=span_dim,
        anisotropic=anis,
        strategy=strategy,
        expansion_dependent=not direct_ran,
        estimate=estimate,
    )


@dataclass
class IotaReport:
    p: int
    n: int
    N: int
    rank: int
    hodge_dim_source: int
    hodge_dim_target: int
    target_degree: str
    injective: bool
    surjective: bool
    bound: int
    bound_holds: bool
    lands_in_hodge: bool
    g_lands_in_11: bool
    strategy: str
    expansion_dependent: bool

    def to_dict(self) -> dict:
        return asdict(self)


def sampson_iota(
    W: WeilJacobian,
    pi: SurjectionData,
    Z_spec=None,
    strategy: str = "auto",
    budget: int = DEFAULT_TERM_CAP,
) -> IotaReport:
    """``beta -> pi_*(g(beta) ^ sum_j omega_j^(N-p-1))`` from (p,p) to (n-p,n-p) classes."""
    p, n = W.p, W.base.n
    if p >= n:
        raise DegenerateCase(f"p = {p} is not below n = {n}")
    if Z_spec is None:
        Z_spec = [W.polarization_form()]
    source = rational_hodge_classes(W.base, p)
    Ds = [g_map(W, b) for b in source.classes]
    g_ok = all(is_hodge_class(W.J_hat, D) for D in Ds)
    estimate = direct_estimate(pi, p)
    used = strategy
    if strategy == "auto":
        used = "direct" if estimate <= budget else "two_term"
    total = None
    for om in Z_spec:
        img = image_of_pushforward_map(pi, om, p, used, Ds, budget=budget)
        total = img.matrix if total is None else total + img.matrix
    r = rank(total) if total.shape[0] else 0
    target = rational_hodge_classes(W.base, n - p)
    rows = [KForm.from_vector(W.base.dim, 2 * (n - p), row) for row in total]
    lands = all(is_hodge_class(W.base.J, f) for f in rows)
    h11 = rational_hodge_classes(W.base, 1).dim
    bound = len(Z_spec) * h11
    return IotaReport(
        p=p,
        n=n,
        N=W.N,
        rank=r,
        hodge_dim_source=source.dim,
        hodge_dim_target=target.dim,
        target_degree=f"H^{{{n - p},{n - p}}}",
        injective=r == source.dim,
        surjective=r == target.dim and lands,
        bound=bound,
        bound_holds=r <= bound,
        lands_in_hodge=lands,
        g_lands_in_11=g_ok,
        strategy=used,
        expansion_dependent=used == "two_term",
    )


# --------------------------------------------------------------------------
# modified approach


class SpanAccumulator:
    """Incrementally maintained row-echelon basis over an exact field."""

    def __init__(self, width: int):
        self.width = width
        self.rows: list = []  # (pivot, row) with row[pivot] = 1

    @property
    def dim(self) -> int:
        return len(self.rows)

    def add(self, vec) -> bool:
        v = list(vec)
        for piv, row in self.rows:
            c = v[piv]
            if c != 0:
                v = [x - c * y for x, y in zip(v, row)]
        piv = next((i for i, x in enumerate(v) if x != 0), None)
        if piv is None:
            return False
        inv = ONE / v[piv]
        self.rows.append((piv, [x * inv for x in v]))
        return True


def graded_lex_monomials(h: int, m: int):
    """Multisets of size m from range(h) in lexicographic order."""
    return combinations_with_replacement(range(h), m)


def _product_coefficients(forms_prime, mult, masks) -> list:
    """Coefficients of prod F_j^{a_j} on each mask, by finite differences of Pf.

    ``prod F_j^{a_j}|_S = sum_{0 <= b <= a} (-1)^{m-|b|} prod C(a_j, b_j) Pf(sum b_j F_j [S])``.
    """
    m = sum(mult)
    out = [ZERO] * len(masks)
    idx = [list(bits(S)) for S in masks]
    for b in iproduct(*(range(a + 1) for a in mult)):
        if not any(b):
            continue
        weight = 1
        for aj, bj in zip(mult, b):
            weight *= comb(aj, bj)
        if (m - sum(b)) % 2:
            weight = -weight
        Mb = None
        for Fj, bj in zip(forms_prime, b):
            if bj:
                Mb = Fj * bj if Mb is None else Mb + Fj * bj
        for t, ix in enumerate(idx):
            pf = pfaffian(Mb[np.ix_(ix, ix)])
            if pf != 0:
                out[t] = out[t] + weight * pf
    return out


@dataclass
class ProbeReport:
    q: int
    span_dim: int
    target_dim: int
    verdict: str
    enumerated: int
    total_monomials: int
    sample_budget: int

    def to_dict(self) -> dict:
        return asdict(self)


def modified_approach_probe(
    pi: SurjectionData, q: int, sample_budget: int = 1000, early_exit: bool = True
) -> ProbeReport:
    """Span of ``pi_*(D_1 ^ ... ^ D_(N-q))`` over monomials in the source (1,1) basis.

    Stops once the span reaches the rational Hodge dimension of the target
    unless ``early_exit`` is false.
    """
    if not 1 <= q <= pi.n:
        raise ValueError(f"q must lie in 1..{pi.n}")
    m = pi.N - q
    classes = rational_hodge_classes(pi.source, 1).classes
    target_dim = rational_hodge_classes(pi.target, pi.n - q).dim
    h = len(classes)
    total = comb(h + m - 1, m) if h else 0
    B = pi.adapted_basis()[0]
    primes = [B.T @ to_skew_matrix(D) @ B for D in classes]
    r2 = pi.fiber_dim
    wmask = (1 << r2) - 1
    masks = [wmask | (U << r2) for U in basis_masks(pi.target_dim, 2 * (pi.n - q))]
    acc = SpanAccumulator(len(masks))
    count = 0
    for mono in graded_lex_monomials(h, m):
        if count >= sample_budget or (early_exit and acc.dim >= target_dim):
            break
        distinct = sorted(set(mono))
        mult = [mono.count(j) for j in distinct]
        acc.add(_product_coefficients([primes[j] for j in distinct], mult, masks))
        count += 1
    if acc.dim >= target_dim:
        verdict = "spans"
    elif count == total:
        verdict = "provably-proper-subspace"
    else:
        verdict = "not-decided-within-budget"
    return ProbeReport(q, acc.dim, target_dim, verdict, count, total, sample_budget)


def polarization_of(pi: SurjectionData) -> KForm:
    return kahler_form(pi.source)
