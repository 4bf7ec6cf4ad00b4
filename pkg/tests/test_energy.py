import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fracac.energy import (
    CSV_HEADER,
    EnergyReport,
    bilinear_form,
    bilinear_positivity_check,
    modified_energy,
    original_energy,
)
from fracac.scheme import SchemeConfig, init_state, step
from fracac.spectral import neumann_grid, periodic_grid
from fracac.timegrid import build_mesh


def test_original_energy_examples():
    g = periodic_grid(32)
    X, Y = g.mesh()
    assert original_energy(g, np.ones(g.shape), 0.3) == 0.0
    assert original_energy(g, np.zeros(g.shape), 0.3) == pytest.approx(math.pi**2, rel=1e-14)
    assert original_energy(g, np.sin(X), 1.0) == pytest.approx(11 * math.pi**2 / 8, rel=1e-13)
    # 11 pi^2 / 8 evaluates to 13.57071
    assert original_energy(g, np.sin(X), 1.0) == pytest.approx(13.57071, abs=1e-5)


@pytest.mark.parametrize("bc", ["periodic", "neumann"])
def test_original_energy_against_doubled_quadrature(bc):
    # nodal trapezoid-type sums of the analytic integrand at twice the resolution
    if bc == "periodic":
        g, g2, k = periodic_grid(24), periodic_grid(48), 1.0
    else:
        g, g2, k = neumann_grid(24), neumann_grid(48), math.pi

    def phi(x, y):
        return 0.8 * np.cos(k * x) * np.cos(2 * k * y) + 0.2 * np.cos(3 * k * x)

    def grad_sq(x, y):
        gx = -0.8 * k * np.sin(k * x) * np.cos(2 * k * y) - 0.6 * k * np.sin(3 * k * x)
        gy = -1.6 * k * np.cos(k * x) * np.sin(2 * k * y)
        return gx**2 + gy**2

    eps2 = 0.07
    X2, Y2 = g2.mesh()
    ref = np.sum(0.5 * eps2 * grad_sq(X2, Y2) + 0.25 * (phi(X2, Y2) ** 2 - 1) ** 2) * g2.cell_area
    X, Y = g.mesh()
    assert original_energy(g, phi(X, Y), eps2) == pytest.approx(ref, rel=1e-6)


def _state(g, phi, R, cfg):
    return replace(init_state(phi, cfg, build_mesh(2), g), R=R)


def test_modified_energy_examples():
    g = periodic_grid(16)
    X, Y = g.mesh()
    cfg = SchemeConfig(alpha=0.5, eps2=0.1, C0=1.0)
    assert modified_energy(_state(g, np.ones(g.shape), 2.0, cfg), cfg) == pytest.approx(4.0)
    val = modified_energy(_state(g, np.sin(X), 1.0, cfg), cfg)
    assert val == pytest.approx(0.05 * 2 * math.pi**2 + 1, rel=1e-13)
    assert val == pytest.approx(1.98696, abs=1e-5)
    full = SchemeConfig(alpha=0.5, eps2=0.1, theta2=0.1, C0=1.0)
    assert modified_energy(_state(g, np.sin(X), 1.5, full), full) == pytest.approx(2.25, rel=1e-14)


def test_modified_energy_cn_difference_term():
    g = periodic_grid(16)
    X, Y = g.mesh()
    cfg = SchemeConfig(alpha=0.5, eps2=0.1, theta2=0.04, C0=1.0, scheme="l1cn")
    s0 = init_state(np.sin(X), cfg, build_mesh(3, 1.0, 0.3), g)
    s1 = step(s0, cfg)
    base = 0.5 * 0.06 * g.grad_norm_sq(s1.phi) + s1.R**2
    extra = 0.25 * 0.04 * g.grad_norm_sq(s1.phi - s0.phi)
    assert extra > 0
    assert modified_energy(s1, cfg) == pytest.approx(base + extra, rel=1e-13)


def _report(n=6):
    g = periodic_grid(16)
    X, Y = g.mesh()
    cfg = SchemeConfig(alpha=0.6, eps2=0.05, scheme="l1plus")
    s = init_state(0.5 * np.sin(X) * np.cos(Y), cfg, build_mesh(n, 2.0), g)
    rep = EnergyReport()
    rep.record(s, cfg)
    for _ in range(n):
        s = step(s, cfg)
        rep.record(s, cfg)
    return rep, s, cfg


def test_report_rows_and_monotone():
    rep, s, cfg = _report()
    assert len(rep) == 7
    assert rep.rows[0].step_change == 0.0
    assert np.all(np.diff(rep.column("t")) > 0)
    assert rep.max_increase("E_mod") == 0.0
    with pytest.raises(ValueError):
        rep.record(s, cfg)


def test_report_csv_round_trip(tmp_path):
    rep, _, _ = _report()
    path = tmp_path / "energy.csv"
    text = rep.to_csv(path)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    back = EnergyReport.from_csv(path)
    assert back.rows == rep.rows
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        EnergyReport.from_csv(path)


def test_bilinear_examples():
    assert bilinear_form(lambda s: np.zeros_like(s), 0.5, 0.0, 1.0) == 0.0
    val = bilinear_form(np.ones_like, 0.5, 0.0, 1.0)
    assert val == pytest.approx(4 / (3 * math.sqrt(math.pi)), rel=1e-13)
    assert val == pytest.approx(0.75225, abs=1e-5)


def _nested_quad(psi, alpha, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)

        def inner(s):
            if s <= a:
                return 0.0
            return integrate.quad(psi, a, s, weight="alg", wvar=(0.0, -alpha), epsrel=1e-13, limit=200)[0]

        val = integrate.quad(lambda s: psi(s) * inner(s), a, b, epsrel=1e-12, limit=200)[0]
    return val / math.gamma(1 - alpha)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
def test_bilinear_against_nested_quadrature(alpha):
    coef = [0.3, -2.0, 1.5, 0.7, -1.1]
    psi = np.polynomial.Polynomial(coef)
    ref = _nested_quad(psi, alpha, 0.4, 2.1)
    assert bilinear_form(psi, alpha, 0.4, 2.1) == pytest.approx(ref, rel=1e-10)


def test_bilinear_positivity_random_polynomials(rng):
    for alpha in (0.3, 0.5, 0.8):
        polys = [np.polynomial.Polynomial(rng.standard_normal(int(rng.integers(1, 12)))) for _ in range(50)]
        worst, scale = bilinear_positivity_check(alpha, (0.0, 1.0), polys)
        assert worst >= -1e-8
        assert scale > 0


@settings(max_examples=40, deadline=None)
@given(
    coef=st.lists(st.floats(-5, 5), min_size=1, max_size=8),
    alpha=st.floats(0.05, 0.95),
    a=st.floats(0.0, 3.0),
    length=st.floats(0.1, 5.0),
)
def test_bilinear_nonnegative_property(coef, alpha, a, length):
    psi = np.polynomial.Polynomial(coef)
    val = bilinear_form(psi, alpha, a, a + length)
    scale = bilinear_form(psi, alpha, a, a + length, absolute=True)
    assert val >= -1e-8 * max(scale, 1e-300)
