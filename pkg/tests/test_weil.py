import random
from math import comb

import numpy as np
import pytest
from gmpy2 import mpq

from hodgeprobe.abelian import (
    CATALOG,
    bidegree_component,
    from_catalog,
    is_hodge_class,
    kahler_form,
    product,
    rational_hodge_classes,
)
from hodgeprobe.errors import DegreeTooLow, EvenP, NotComplexLinear, NotIntegral, NotSurjective
from hodgeprobe.exact_linalg import as_matrix, identity, matrices_equal, rank, saturate, hermite_normal_form
from hodgeprobe.exterior import (
    KForm,
    Multivector,
    basis_masks,
    dx,
    induced_power_map,
    power,
    shuffle_comultiplication,
    wedge,
)
from hodgeprobe.weil import (
    build_weil_jacobian,
    contraction_matrix,
    custom_surjection,
    f_map,
    g_map,
    psi,
    psi_inverse,
    pullback,
    pushforward,
    sampson_projection,
)

from conftest import random_form


@pytest.fixture(scope="module")
def W3(A3):
    return build_weil_jacobian(A3, 3)


@pytest.fixture(scope="module")
def pi3(W3):
    return sampson_projection(W3)


def test_weil_p1_is_base(A1):
    W = build_weil_jacobian(A1, 1)
    assert matrices_equal(W.J_hat, A1.J) and matrices_equal(W.E_hat, A1.E)


def test_weil_even_p(A2):
    with pytest.raises(EvenP):
        build_weil_jacobian(A2, 2)


@pytest.mark.parametrize("label", list(CATALOG))
def test_weil_axioms_catalog(label):
    A = from_catalog(label)
    for p in range(1, A.dim, 2):
        W = build_weil_jacobian(A, p)
        assert W.N == comb(A.dim, p) // 2
        assert matrices_equal(W.J_hat @ W.J_hat, -identity(W.dim))
        assert matrices_equal(W.J_hat.T @ W.E_hat @ W.J_hat, W.E_hat)


def test_sampson_a2_examples(A2):
    pi = sampson_projection(build_weil_jacobian(A2, 3))
    masks = basis_masks(4, 3)
    col = {m: pi.matrix[:, i] for i, m in enumerate(masks)}
    unit = lambda j: [1 if r == j else 0 for r in range(4)]
    assert list(col[0b1101]) == unit(0)  # e_134 -> e_1
    assert list(col[0b1110]) == unit(1)  # e_234 -> e_2
    assert list(col[0b0111]) == unit(2)  # e_123 -> e_3
    assert list(col[0b1011]) == unit(3)  # e_124 -> e_4
    assert pi.kernel_frame.shape[0] == 0


def test_sampson_a3_shape(pi3):
    assert rank(pi3.matrix) == 6
    assert pi3.matrix.shape == (6, 20)
    assert pi3.kernel_frame.shape == (14, 20)
    assert matrices_equal(hermite_normal_form(saturate(pi3.kernel_frame)), hermite_normal_form(pi3.kernel_frame))
    # the kernel is a complex subspace
    JW = (pi3.source_J @ pi3.kernel_frame.T).T
    assert rank(np.vstack([pi3.kernel_frame, JW])) == 14


def test_sampson_p1_identity(A2):
    pi = sampson_projection(build_weil_jacobian(A2, 1))
    assert matrices_equal(pi.matrix, identity(4))


@pytest.mark.parametrize("label", list(CATALOG))
def test_sampson_properties_catalog(label):
    A = from_catalog(label)
    for p in range(1, A.dim, 2):
        W = build_weil_jacobian(A, p)
        pi = sampson_projection(W)
        assert matrices_equal(pi.matrix @ W.J_hat, A.J @ pi.matrix)
        Lp = power(kahler_form(A), (p - 1) // 2)
        for j in range(1, A.dim + 1):
            assert psi(pullback(pi, dx(j, A.dim)), A.dim, p) == wedge(dx(j, A.dim), Lp)
        assert matrices_equal(contraction_matrix(A, p), pi.matrix * ((p + 1) // 2))


def test_psi_examples():
    masks = basis_masks(4, 3)
    u = KForm(4, 1, {1 << masks.index(0b1101): 1})
    assert psi(u, 4, 3) == KForm.from_dict(4, {(1, 3, 4): 1})
    rng = random.Random(1)
    for _ in range(10):
        v = random_form(rng, 20, 1, 5)
        assert psi_inverse(psi(v, 6, 3)) == v


def test_custom_surjections(A1):
    A2 = product(A1, A1)
    A3 = product(A1, A1, A1)
    pi = custom_surjection(A3, A2, [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]])
    assert matrices_equal(pi.kernel_frame, as_matrix([[0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]]))
    pi2 = custom_surjection(A3, A2, [[2, 0, 0, 0, 0, 0], [0, 2, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]])
    assert pi2.lattice_index == 4
    with pytest.raises(NotComplexLinear):
        custom_surjection(A3, A2, [[1, 1, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]])
    with pytest.raises(NotSurjective):
        custom_surjection(A3, A2, [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]])
    with pytest.raises(NotIntegral):
        custom_surjection(A3, A2, [[mpq(1, 2), 0, 0, 0, 0, 0], [0, mpq(1, 2), 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]])


@pytest.fixture(scope="module")
def proj21(A1):
    return custom_surjection(product(A1, A1), A1, [[1, 0, 0, 0], [0, 1, 0, 0]])


def test_pushforward_examples(proj21):
    assert pushforward(proj21, KForm.from_dict(4, {(3, 4): 1})) == KForm.scalar(2)
    assert pushforward(proj21, KForm.from_dict(4, {(1, 3, 4): 1})) == dx(1, 2)
    assert pushforward(proj21, KForm.from_dict(4, {(1, 2): 1})).is_zero()
    with pytest.raises(DegreeTooLow):
        pushforward(proj21, dx(1, 4))


def test_pushforward_identity_fiber(A2):
    pi = sampson_projection(build_weil_jacobian(A2, 3))
    rng = random.Random(2)
    from hodgeprobe.exact_linalg import inverse
    from hodgeprobe.exterior import pullback_form

    for k in range(1, 5):
        u = random_form(rng, 4, k, 4)
        assert pushforward(pi, u) == pullback_form(inverse(pi.matrix), u)


def _random_lift(pi, rng):
    s = pi.default_lift()
    F = pi.kernel_frame
    if F.shape[0] == 0:
        return s
    C = as_matrix([[rng.randint(-3, 3) for _ in range(pi.target_dim)] for _ in range(F.shape[0])])
    return s + F.T @ C


def test_pushforward_lift_independent(pi3):
    rng = random.Random(7)
    nonzero = 0
    for _ in range(10):
        eta = random_form(rng, 20, 16, 40)
        base = pushforward(pi3, eta)
        assert pushforward(pi3, eta, lift=_random_lift(pi3, rng)) == base
        nonzero += not base.is_zero()
    assert nonzero


def test_projection_formula_sampson(pi3):
    rng = random.Random(8)
    nonzero = 0
    for _ in range(5):
        u = random_form(rng, 6, 2, 3)
        eta = random_form(rng, 20, 16, 40)
        lhs = pushforward(pi3, wedge(pullback(pi3, u), eta))
        rhs = wedge(u, pushforward(pi3, eta))
        assert lhs == rhs
        assert lhs.degree == eta.degree + u.degree - pi3.fiber_dim
        nonzero += not lhs.is_zero()
    assert nonzero


def test_pullback_preserves_11(pi3):
    for c in rational_hodge_classes(pi3.target, 1).classes:
        assert is_hodge_class(pi3.source_J, pullback(pi3, c))


def test_f_g_p1_identity(A2):
    W = build_weil_jacobian(A2, 1)
    u = KForm.from_dict(4, {(1, 2): 3, (2, 4): -1})
    assert f_map(W, u) == u and g_map(W, u) == u


def test_f_after_g_scales(W3):
    rng = random.Random(4)
    for _ in range(5):
        beta = random_form(rng, 6, 6, 1)
        assert f_map(W3, g_map(W3, beta)) == beta * (comb(6, 3) // 2)


def test_g_alternating_pairing(W3):
    rng = random.Random(6)
    beta = random_form(rng, 6, 6, 1)
    gb = g_map(W3, beta)
    x = [rng.randint(-2, 2) for _ in range(20)]
    y = [rng.randint(-2, 2) for _ in range(20)]
    assert gb.evaluate([x, y]) == -gb.evaluate([y, x])


def test_f_adjoint_to_comultiplication(W3):
    rng = random.Random(9)
    for _ in range(5):
        eta = random_form(rng, 20, 2, 6)
        x = Multivector.from_dict(6, {(1, 2, 3, 4, 5, 6): rng.randint(1, 5)})
        mu = shuffle_comultiplication(3, x)
        lhs = sum((c * f_map(W3, eta).terms.get(m, 0) for m, c in x.items()), mpq(0))
        rhs = sum((c * eta.terms.get(m, 0) for m, c in mu.items()), mpq(0))
        assert lhs == rhs


def test_g_pairing_identity(W3):
    # <g(beta), e_I ^ e_J> = <beta, e_I ^ e_J in the 2p-th power>
    rng = random.Random(10)
    beta = random_form(rng, 6, 6, 1)
    gb = g_map(W3, beta)
    masks = basis_masks(6, 3)
    for a, b in [(0, 19), (3, 12), (5, 7)]:
        I_, J_ = masks[a], masks[b]
        vx = [1 if k == a else 0 for k in range(20)]
        vy = [1 if k == b else 0 for k in range(20)]
        prod = wedge(KForm(6, 3, {I_: 1}), KForm(6, 3, {J_: 1}))
        expected = sum((c * beta.terms.get(m, 0) for m, c in prod.items()), mpq(0))
        assert gb.evaluate([vx, vy]) == expected


def test_f_of_polarization_is_invariant(W3, A3):
    f = f_map(W3, W3.polarization_form())
    J6 = induced_power_map(A3.J, 6)
    assert matrices_equal(J6 @ f.to_vector(), f.to_vector())


@pytest.mark.parametrize("label", ["A2", "A3", "B2"])
def test_g_lands_in_rational_11(label):
    A = from_catalog(label)
    W = build_weil_jacobian(A, 3)
    for beta in rational_hodge_classes(A, 3 if A.n >= 3 else A.n).classes:
        if beta.degree != 6:
            continue
        gb = g_map(W, beta)
        assert is_hodge_class(W.J_hat, gb)
        assert bidegree_component(W.J_hat, gb, (2, 0)).is_zero()


def test_f_maps_weil_hodge_classes_to_hodge_classes(W3, A3):
    classes = rational_hodge_classes(W3.as_variety(), 1).classes
    images = [f_map(W3, c) for c in classes]
    assert all(is_hodge_class(A3.J, u) for u in images)
    # the top degree of A_3 is one-dimensional and f hits it
    assert any(not u.is_zero() for u in images)
