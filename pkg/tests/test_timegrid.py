import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracac.timegrid import (
    SCHEMES,
    TimeMesh,
    build_composite_mesh,
    build_mesh,
    classical_weights,
    graded_l1_weights,
    l1_weights,
    l1cn_weights,
    l1plus_weights,
    local_weight,
    mixed_powdiff,
    powdiff,
    quad_weights,
    weight_entries,
)

from oracles import weight_by_quadrature


def test_uniform_mesh():
    m = build_mesh(4, 1.0, 1.0)
    np.testing.assert_allclose(m.points, [0, 0.25, 0.5, 0.75, 1.0])
    assert m.kind == "uniform"
    assert m.M == 4 and m.T == 1.0


def test_graded_mesh_values():
    m = build_mesh(4, 2.0, 1.0)
    np.testing.assert_allclose(m.points, [0, 0.0625, 0.25, 0.5625, 1.0])
    assert m.step(1) == pytest.approx(0.0625)
    assert m.tau_max == pytest.approx(m.step(4))
    assert m.tau_max == pytest.approx(0.4375)


def test_mesh_validation():
    with pytest.raises(ValueError):
        build_mesh(0)
    with pytest.raises(ValueError):
        build_mesh(4, r=0.5)
    with pytest.raises(ValueError):
        build_mesh(4, T=0.0)
    with pytest.raises(ValueError):
        TimeMesh(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeMesh(np.array([0.1, 0.5]))
    with pytest.raises(IndexError):
        build_mesh(4).step(5)


def test_composite_mesh():
    m = build_composite_mesh((100, 2.0, 1.0), (1.0, 50.0))
    assert m.M == 149
    assert m.points[100] == pytest.approx(1.0)
    np.testing.assert_allclose(m.tau[100:], 1.0)
    assert m.T == 50.0


def test_composite_mesh_short_last_step():
    m = build_composite_mesh((10, 1.0, 1.0), (0.3, 2.0))
    assert m.T == 2.0
    np.testing.assert_allclose(m.tau[10:-1], 0.3)
    assert m.tau[-1] == pytest.approx(0.1)


def test_composite_mesh_rounding_tolerance():
    # 0.01 does not divide 99 exactly in binary; must not add a sliver step
    m = build_composite_mesh((100, 3.0, 1.0), (0.01, 100.0))
    assert m.M == 100 + 9900
    assert m.tau[-1] == pytest.approx(0.01)


def test_powdiff_against_mpmath():
    mpmath.mp.dps = 40
    rng = np.random.default_rng(3)
    for _ in range(500):
        x = 10 ** rng.uniform(-12, 2)
        d = 10 ** rng.uniform(-12, 2)
        p = rng.uniform(0.05, 1.95)
        ref = (mpmath.mpf(x) + mpmath.mpf(d)) ** p - mpmath.mpf(x) ** p
        assert powdiff(x, d, p)[()] == pytest.approx(float(ref), rel=1e-13)
    assert powdiff(0.0, 4.0, 0.5)[()] == pytest.approx(2.0)


def test_mixed_powdiff_against_mpmath():
    mpmath.mp.dps = 50
    rng = np.random.default_rng(4)
    for _ in range(500):
        a = 10 ** rng.uniform(-12, 1) * rng.integers(0, 2)
        h = 10 ** rng.uniform(-10, 0)
        d = 10 ** rng.uniform(-12, 0)
        p = rng.uniform(1.05, 1.95)
        A, H, D, P = map(mpmath.mpf, (a, h, d, p))
        ref = (A + H + D) ** P - (A + D) ** P - (A + H) ** P + A**P
        got = mixed_powdiff(np.array([a]), h, np.array([d]), p)[0]
        assert got == pytest.approx(float(ref), rel=1e-12)


def unit_mesh(M: int) -> TimeMesh:
    return build_mesh(M, 1.0, float(M))


def test_l1_unit_step_examples():
    np.testing.assert_allclose(l1_weights(unit_mesh(4), 0, 0.5).b, [2 / math.sqrt(math.pi)], rtol=1e-14)
    w = l1_weights(unit_mesh(4), 1, 0.5).b
    # (sqrt 2 - 1) 2 / sqrt(pi) = 0.467390
    np.testing.assert_allclose(w, [1.128379, 0.467390], atol=1e-6)
    assert w[1] == pytest.approx((math.sqrt(2) - 1) * 2 / math.sqrt(math.pi), rel=1e-14)


def test_l1_graded_example():
    w = l1_weights(build_mesh(2, 2.0, 1.0), 1, 0.5).b
    assert w[0] == pytest.approx(math.sqrt(3 / math.pi), rel=1e-14)
    assert w[0] == pytest.approx(0.977205, abs=1e-6)
    np.testing.assert_allclose(w, graded_l1_weights(2, 2.0, 1.0, 1, 0.5), rtol=1e-14)


def test_local_weights():
    tau, a = 0.01, 0.3
    assert local_weight("l1", tau, a) == pytest.approx(tau**0.7 / math.gamma(1.7))
    assert local_weight("l1cn", tau, a) == pytest.approx(tau**0.7 / (math.gamma(1.7) * 2**0.7))
    assert local_weight("l1plus", tau, a) == pytest.approx(tau**0.7 / math.gamma(2.7))
    with pytest.raises(ValueError):
        local_weight("bdf2", tau, a)


def test_l1cn_unit_step_examples():
    assert l1cn_weights(unit_mesh(4), 0, 0.5).local == pytest.approx(0.797885, abs=1e-6)
    w = l1cn_weights(unit_mesh(4), 1, 0.5).b
    ref = (math.sqrt(1.5) - math.sqrt(0.5)) * 2 / math.sqrt(math.pi)
    assert w[1] == pytest.approx(ref, rel=1e-14)
    # ref evaluates to 0.584092
    assert w[1] == pytest.approx(0.584092, abs=1e-6)


def test_l1plus_unit_step_examples():
    assert l1plus_weights(unit_mesh(4), 0, 0.5).local == pytest.approx(1 / math.gamma(2.5), rel=1e-14)
    assert l1plus_weights(unit_mesh(4), 0, 0.5).local == pytest.approx(0.752252, abs=1e-6)
    w = l1plus_weights(unit_mesh(4), 1, 0.5).b
    ref = (2**1.5 - 1 - 1 + 0) / math.gamma(2.5)
    assert w[1] == pytest.approx(ref, rel=1e-14)
    # ref evaluates to 0.623187
    assert w[1] == pytest.approx(0.623187, abs=1e-6)


def test_local_weight_is_degenerate_history_entry():
    # the history formulas with k = n (kernel over the current step) give b[0];
    # for L1+ the (t_n - t_{k+1}) term is clamped at zero (only t >= s contributes)
    mesh = build_mesh(9, 2.0, 3.0)
    t, a = mesh.points, 0.45
    for n in (0, 4, 8):
        h = t[n + 1] - t[n]
        l1 = (h ** (1 - a) - 0.0) / math.gamma(2 - a)
        assert l1_weights(mesh, n, a).local == pytest.approx(l1, rel=1e-14)
        l1p = (h ** (2 - a) - 0.0 - 0.0 + 0.0) / (math.gamma(3 - a) * h)
        assert l1plus_weights(mesh, n, a).local == pytest.approx(l1p, rel=1e-14)


def test_graded_closed_form_matches_general():
    M, r, T, a = 20, 3.0, 2.0, 0.4
    mesh = build_mesh(M, r, T)
    for n in (0, 1, 7, 19):
        np.testing.assert_allclose(graded_l1_weights(M, r, T, n, a), l1_weights(mesh, n, a).b, rtol=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_weights_against_quadrature(scheme):
    mesh = build_mesh(12, 2.5, 1.5)
    a = 0.35
    for n in (0, 1, 5, 11):
        w = quad_weights(scheme, mesh, n, a).b
        for j in range(n + 1):
            assert w[j] == pytest.approx(weight_by_quadrature(scheme, mesh.points, n, j, a), rel=1e-11)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_weights_positive_and_decreasing_uniform(scheme):
    w = quad_weights(scheme, build_mesh(50), 49, 0.6).b
    assert np.all(w > 0)
    assert np.all(np.diff(w[1:]) < 0)


def test_weight_entries_subset():
    mesh = build_mesh(30, 2.0)
    full = l1plus_weights(mesh, 20, 0.7).b
    np.testing.assert_allclose(weight_entries("l1plus", mesh, 20, 0.7, [1, 5, 20]), full[[1, 5, 20]], rtol=1e-14)
    with pytest.raises(IndexError):
        weight_entries("l1", mesh, 20, 0.7, [0])


def test_weight_validation():
    mesh = build_mesh(5)
    for a in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            l1_weights(mesh, 1, a)
    with pytest.raises(IndexError):
        l1_weights(mesh, 5, 0.5)
    with pytest.raises(ValueError):
        quad_weights("l2", mesh, 1, 0.5)


def test_weights_positive_random_meshes():
    rng = np.random.default_rng(11)
    for _ in range(100):
        M = int(rng.integers(2, 40))
        pts = np.concatenate([[0.0], np.cumsum(rng.uniform(1e-3, 1.0, M))])
        mesh = TimeMesh(pts)
        a = float(rng.choice(np.arange(1, 10) / 10))
        n = int(rng.integers(0, M))
        for scheme in SCHEMES:
            assert np.all(quad_weights(scheme, mesh, n, a).b > 0)


def test_classical_weights():
    w = classical_weights(3)
    assert w.local == 1.0
    assert not w.history.any()


@settings(max_examples=60, deadline=None)
@given(
    M=st.integers(2, 40),
    r=st.floats(1.0, 4.0),
    a=st.floats(0.02, 0.98),
    data=st.data(),
)
def test_l1_weights_telescope(M, r, a, data):
    # sum of all L1 weights is int_0^{t_{n+1}} (t_{n+1} - s)^-a ds / Gamma(1 - a)
    mesh = build_mesh(M, r, 1.0)
    n = data.draw(st.integers(0, M - 1))
    w = l1_weights(mesh, n, a).b
    total = mesh.points[n + 1] ** (1 - a) / math.gamma(2 - a)
    assert w.sum() == pytest.approx(total, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(M=st.integers(2, 40), r=st.floats(1.0, 4.0), a=st.floats(0.02, 0.98), data=st.data())
def test_l1plus_weights_telescope(M, r, a, data):
    # averaged over [t_n, t_{n+1}]: sum_j b[j] = (t_{n+1}^{2-a} - t_n^{2-a}) / (Gamma(3-a) tau)
    mesh = build_mesh(M, r, 1.0)
    n = data.draw(st.integers(0, M - 1))
    t = mesh.points
    w = l1plus_weights(mesh, n, a).b
    h = t[n + 1] - t[n]
    total = float(powdiff(t[n], h, 2 - a)) / (math.gamma(3 - a) * h)
    assert w.sum() == pytest.approx(total, rel=1e-11)
