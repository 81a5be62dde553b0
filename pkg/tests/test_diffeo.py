import numpy as np
import pytest

from difftorus.diffeo import (
    Diffeo,
    VectorField,
    act_on_scalar,
    compose,
    divergence,
    flow,
    inverse,
    jacobian,
    jacobian_determinant,
    lie_bracket,
    lie_derivative,
    pullback_form,
    vector_jacobian,
)
from difftorus.errors import RegularityError
from difftorus.geometry import KForm, MatrixField, exterior_d, form_distance, matmul_fields
from difftorus.spectral import (
    FourierScalar,
    GridSpec,
    coeff_distance,
    coeff_sup,
    cosine,
    sine,
    sup_norm,
    values_on_grid,
)

S1 = GridSpec(dim=1, degree=16)
T2 = GridSpec(dim=2, degree=8)


def rand_scalar(spec, rng, degree=2, amp=0.3):
    c = {}
    for _ in range(4):
        r = tuple(int(rng.integers(-degree, degree + 1)) for _ in range(spec.dim))
        if all(v == 0 for v in r):
            continue
        c[r] = complex(rng.normal(), rng.normal())
    a = FourierScalar.from_modes(spec, c)
    peak = sup_norm(a)
    return (amp / peak) * a if peak > 0 else a


def rand_diffeo(spec, rng, amp=0.04, degree=2):
    comps = [rand_scalar(spec, rng, degree=degree, amp=1.0) for _ in range(spec.dim)]
    F = Diffeo.from_displacement(comps)
    # normalize so the jacobian perturbation has the requested sup
    peak = max(
        sup_norm(jacobian(F).entries[i][k]) - (1.0 if i == k else 0.0)
        for i in range(spec.dim)
        for k in range(spec.dim)
    )
    scale = amp / max(peak, 1e-12)
    return Diffeo.from_displacement([scale * c for c in comps])


def rand_vector_field(spec, rng, amp=0.3, degree=2):
    return VectorField.from_components(
        [rand_scalar(spec, rng, degree=degree, amp=amp) for _ in range(spec.dim)]
    )


def matrix_distance(m1, m2):
    return max(
        coeff_distance(a, b)
        for ra, rb in zip(m1.entries, m2.entries)
        for a, b in zip(ra, rb)
    )


def matrix_sup(m):
    return max(sup_norm(a) for row in m.entries for a in row)


# -- group structure ---------------------------------------------------------


def test_compose_with_identity(rng):
    F = rand_diffeo(T2, rng)
    ident = Diffeo.identity(T2)
    for G in (compose(ident, F), compose(F, ident)):
        assert max(
            coeff_distance(a, b)
            for a, b in zip(G.displacement, F.displacement)
        ) < 1e-13
        assert np.array_equal(G.winding, F.winding)


def test_translations_add():
    F = Diffeo.translation(T2, (0.3, 0.1))
    G = Diffeo.translation(T2, (0.25, 0.5))
    H = compose(F, G)
    assert coeff_distance(
        H.displacement[0], FourierScalar.constant(T2, 0.55)
    ) < 1e-13
    assert coeff_distance(
        H.displacement[1], FourierScalar.constant(T2, 0.6)
    ) < 1e-13


def test_compose_associative(rng):
    F, G, H = (rand_diffeo(T2, rng) for _ in range(3))
    lhs = compose(compose(F, G), H)
    rhs = compose(F, compose(G, H))
    assert max(
        coeff_distance(a, b) for a, b in zip(lhs.displacement, rhs.displacement)
    ) < 1e-7
    # dense-grid oracle: evaluate the triple composition directly
    pts = rng.random((60, 2))
    direct = F(G(H(pts)) % 1.0)
    assert np.max(np.abs(lhs(pts) - direct)) < 1e-7


def test_compose_with_winding(rng):
    A = np.array([[1, 1], [0, 1]])
    F = Diffeo.from_displacement(
        [rand_scalar(T2, rng, amp=0.02) for _ in range(2)], winding=A
    )
    G = rand_diffeo(T2, rng, amp=0.02)
    H = compose(F, G)
    assert np.array_equal(H.winding, A)
    pts = rng.random((40, 2))
    assert np.max(np.abs(H(pts) - F(G(pts) % 1.0))) < 1e-9


def test_inverse_translation_and_identity():
    F = Diffeo.translation(T2, (0.3, 0.7))
    Finv = inverse(F)
    assert coeff_distance(
        Finv.displacement[0], FourierScalar.constant(T2, -0.3)
    ) < 1e-12
    ident = inverse(Diffeo.identity(T2))
    assert all(coeff_sup(f) < 1e-12 for f in ident.displacement)


def test_inverse_matches_bisection_oracle():
    amp = 0.05
    F = Diffeo.from_displacement([sine(S1, (1,), amplitude=amp)])
    Finv = inverse(F)

    def brentish(y):
        lo, hi = y - 2 * amp, y + 2 * amp
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid + amp * np.sin(2 * np.pi * mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    ys = np.linspace(0.0, 1.0, 41)[:-1]
    oracle = np.array([brentish(y) for y in ys])
    got = Finv(ys.reshape(-1, 1))[:, 0]
    assert np.max(np.abs(got - oracle)) < 1e-9

    FFinv = compose(F, Finv)
    assert max(sup_norm(f) for f in FFinv.displacement) < 1e-8


def test_inverse_with_winding(rng):
    A = np.array([[2, 1], [1, 1]])  # det 1
    F = Diffeo.from_displacement(
        [rand_scalar(T2, rng, amp=0.02) for _ in range(2)], winding=A
    )
    Finv = inverse(F)
    FFinv = compose(F, Finv)
    assert np.array_equal(FFinv.winding, np.eye(2, dtype=int))
    assert max(sup_norm(f) for f in FFinv.displacement) < 1e-8


def test_regularity_certificate_rejects_folds():
    with pytest.raises(RegularityError):
        Diffeo.from_displacement([sine(S1, (1,), amplitude=0.2)])  # 1+0.4pi cos < 0


# -- jacobians ----------------------------------------------------------------


def test_jacobian_identity_and_circle():
    assert matrix_distance(
        jacobian(Diffeo.identity(T2)), MatrixField.identity(T2)
    ) == 0.0
    eps = 0.03
    F = Diffeo.from_displacement([sine(S1, (1,), amplitude=eps)])
    expected = FourierScalar.constant(S1, 1.0) + cosine(
        S1, (1,), amplitude=2 * np.pi * eps
    )
    assert coeff_distance(jacobian(F).entries[0][0], expected) < 1e-14


def test_chain_rule(rng):
    # crossed-homomorphism law of the jacobian under composition
    for _ in range(5):
        F, G = rand_diffeo(T2, rng), rand_diffeo(T2, rng)
        lhs = jacobian(compose(F, G))
        rhs = matmul_fields(act_on_matrix_safe(jacobian(F), G), jacobian(G))
        assert matrix_sup(lhs - rhs) < 1e-7


def act_on_matrix_safe(m, F):
    from difftorus.diffeo import act_on_matrix

    return act_on_matrix(m, F)


def test_jacobian_determinant(rng):
    F = rand_diffeo(T2, rng)
    det = jacobian_determinant(F)
    vals = np.linalg.det(jacobian(F).values())
    assert np.max(np.abs(values_on_grid(det) - vals)) < 1e-10


# -- actions ------------------------------------------------------------------


def test_act_identity_and_constant(rng):
    a = rand_scalar(T2, rng)
    assert coeff_distance(act_on_scalar(a, Diffeo.identity(T2)), a) < 1e-13
    c = FourierScalar.constant(T2, 2.0)
    F = rand_diffeo(T2, rng)
    assert coeff_distance(act_on_scalar(c, F), c) < 1e-13


def test_act_translation_shift():
    a = sine(T2, (1, 0))
    F = Diffeo.translation(T2, (0.25, 0.0))
    assert coeff_distance(act_on_scalar(a, F), cosine(T2, (1, 0))) < 1e-13


def test_right_action_law(rng):
    a = rand_scalar(T2, rng, amp=0.5)
    F, G = rand_diffeo(T2, rng), rand_diffeo(T2, rng)
    lhs = act_on_scalar(act_on_scalar(a, F), G)
    rhs = act_on_scalar(a, compose(F, G))
    assert coeff_distance(lhs, rhs) < 1e-7


# -- pullbacks ----------------------------------------------------------------


def test_pullback_basic():
    spec = S1
    eps = 0.04
    F = Diffeo.from_displacement([sine(spec, (1,), amplitude=eps)])
    w = KForm.one_form([FourierScalar.constant(spec, 1.0)])
    pulled = pullback_form(w, F)
    expected = FourierScalar.constant(spec, 1.0) + cosine(
        spec, (1,), amplitude=2 * np.pi * eps
    )
    assert coeff_distance(pulled.component((0,)), expected) < 1e-12

    ident = Diffeo.identity(T2)
    w2 = KForm.one_form([cosine(T2, (1, 0)), sine(T2, (0, 1))])
    assert form_distance(pullback_form(w2, ident), w2) < 1e-13


def test_pullback_right_action(rng):
    w = KForm.one_form(
        [rand_scalar(T2, rng, amp=0.4), rand_scalar(T2, rng, amp=0.4)]
    )
    F, G = rand_diffeo(T2, rng), rand_diffeo(T2, rng)
    lhs = pullback_form(pullback_form(w, F), G)
    rhs = pullback_form(w, compose(F, G))
    assert form_distance(lhs, rhs) < 1e-7


def test_pullback_commutes_with_d(rng):
    a = KForm.from_scalar(rand_scalar(T2, rng, amp=0.4))
    F = rand_diffeo(T2, rng)
    assert form_distance(
        exterior_d(pullback_form(a, F)), pullback_form(exterior_d(a), F)
    ) < 1e-7
    w = KForm.one_form(
        [rand_scalar(T2, rng, amp=0.4), rand_scalar(T2, rng, amp=0.4)]
    )
    assert form_distance(
        exterior_d(pullback_form(w, F)), pullback_form(exterior_d(w), F)
    ) < 1e-7


# -- Lie algebra ---------------------------------------------------------------


def test_bracket_constants_commute():
    d1 = VectorField.from_components(
        [FourierScalar.constant(T2, 1.0), FourierScalar.zeros(T2)]
    )
    d2 = VectorField.from_components(
        [FourierScalar.zeros(T2), FourierScalar.constant(T2, 1.0)]
    )
    br = lie_bracket(d1, d2)
    assert all(coeff_sup(c) == 0.0 for c in br.components)


def test_bracket_symbolic_oracle():
    # [d/dx1, sin(2 pi x1) d/dx2] = 2 pi cos(2 pi x1) d/dx2
    v = VectorField.from_components(
        [FourierScalar.constant(T2, 1.0), FourierScalar.zeros(T2)]
    )
    w = VectorField.from_components(
        [FourierScalar.zeros(T2), sine(T2, (1, 0))]
    )
    br = lie_bracket(v, w)
    assert coeff_sup(br.components[0]) < 1e-14
    assert coeff_distance(
        br.components[1], cosine(T2, (1, 0), amplitude=2 * np.pi)
    ) < 1e-13


def test_bracket_jacobi(rng):
    u, v, w = (rand_vector_field(T2, rng, amp=0.4) for _ in range(3))
    total = (
        lie_bracket(u, lie_bracket(v, w))
        + lie_bracket(v, lie_bracket(w, u))
        + lie_bracket(w, lie_bracket(u, v))
    )
    assert max(coeff_sup(c) for c in total.components) < 1e-8


def test_divergence():
    assert coeff_sup(
        divergence(
            VectorField.from_components(
                [FourierScalar.constant(T2, 1.0), FourierScalar.zeros(T2)]
            )
        )
    ) == 0.0
    v = VectorField.from_components([sine(T2, (0, 1)), FourierScalar.zeros(T2)])
    assert coeff_sup(divergence(v)) == 0.0
    v2 = VectorField.from_components([sine(T2, (1, 0)), FourierScalar.zeros(T2)])
    assert coeff_distance(
        divergence(v2), cosine(T2, (1, 0), amplitude=2 * np.pi)
    ) < 1e-13


def test_lie_derivative_basics(rng):
    a = rand_scalar(T2, rng)
    d1 = VectorField.from_components(
        [FourierScalar.constant(T2, 1.0), FourierScalar.zeros(T2)]
    )
    w = KForm(T2, 1, {(1,): a})
    lw = lie_derivative(d1, w)
    assert coeff_distance(lw.component((1,)), differentiate_axis0(a)) < 1e-13
    assert coeff_sup(lw.component((0,))) < 1e-14

    v = rand_vector_field(T2, rng)
    zero_form = KForm.from_scalar(a)
    from difftorus.diffeo import directional_derivative

    assert form_distance(
        lie_derivative(v, zero_form),
        KForm.from_scalar(directional_derivative(v, a)),
    ) == 0.0


def differentiate_axis0(a):
    from difftorus.spectral import differentiate

    return differentiate(a, 0)


def test_lie_derivative_commutes_with_d(rng):
    v = rand_vector_field(T2, rng, amp=0.3)
    w = KForm.one_form([rand_scalar(T2, rng, amp=0.4), rand_scalar(T2, rng, amp=0.4)])
    assert form_distance(
        exterior_d(lie_derivative(v, w)), lie_derivative(v, exterior_d(w))
    ) < 1e-7


def test_lie_derivative_is_flow_derivative(rng):
    v = rand_vector_field(T2, rng, amp=0.2)
    w = KForm.one_form([rand_scalar(T2, rng, amp=0.4), rand_scalar(T2, rng, amp=0.4)])
    h = 5e-3
    plus = pullback_form(w, flow(v, h))
    minus = pullback_form(w, flow(v, -h))
    fd = (1.0 / (2 * h)) * (plus - minus)
    assert form_distance(fd, lie_derivative(v, w)) < 1e-4


# -- flows ---------------------------------------------------------------------


def test_flow_translation_and_zero_time(rng):
    c = VectorField.from_components(
        [FourierScalar.constant(T2, 0.5), FourierScalar.zeros(T2)]
    )
    F = flow(c, 0.4)
    assert coeff_distance(
        F.displacement[0], FourierScalar.constant(T2, 0.2)
    ) < 1e-12
    v = rand_vector_field(T2, rng)
    F0 = flow(v, 0.0)
    assert all(coeff_sup(f) < 1e-14 for f in F0.displacement)


def test_flow_matches_adaptive_oracle():
    from scipy.integrate import solve_ivp

    spec = S1
    v = VectorField.from_components([sine(spec, (1,), amplitude=0.2)])
    t = 0.1
    F = flow(v, t)

    def rhs(_, y):
        return 0.2 * np.sin(2 * np.pi * y)

    ys = np.linspace(0.0, 1.0, 17)[:-1]
    oracle = np.array(
        [
            solve_ivp(rhs, (0, t), [y], rtol=1e-12, atol=1e-13).y[0, -1]
            for y in ys
        ]
    )
    got = F(ys.reshape(-1, 1))[:, 0]
    assert np.max(np.abs(got - oracle)) < 1e-8


def test_flow_one_parameter_group(rng):
    v = rand_vector_field(T2, rng, amp=0.2)
    lhs = flow(v, 0.15)
    rhs = compose(flow(v, 0.1), flow(v, 0.05))
    assert max(
        coeff_distance(a, b) for a, b in zip(lhs.displacement, rhs.displacement)
    ) < 1e-6


def test_flow_jacobian_derivative_matches_vector_jacobian(rng):
    v = rand_vector_field(T2, rng, amp=0.2)
    h = 5e-3
    jp = jacobian(flow(v, h))
    jm = jacobian(flow(v, -h))
    fd = MatrixField.from_rows(
        [
            [(1.0 / (2 * h)) * (jp.entries[i][k] - jm.entries[i][k]) for k in range(2)]
            for i in range(2)
        ]
    )
    assert matrix_sup(fd - vector_jacobian(v)) < 1e-4
