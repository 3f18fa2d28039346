import numpy as np
import pytest

from kerrphase.fields import (GridError, PhaseGrid, ScalarField, default_grid,
                              differentiate, fd_weights, integrate,
                              interpolate, laplacian, radial_derivative)


def gaussian_field(grid, scale=1.0):
    X, P = grid.mesh()
    return ScalarField(grid, scale / np.pi * np.exp(-(X**2 + P**2)), label="W")


class TestPhaseGrid:
    def test_rejects_even_or_small_axes(self):
        with pytest.raises(GridError):
            PhaseGrid.symmetric(6.0, 32)
        with pytest.raises(GridError):
            PhaseGrid.symmetric(6.0, 31)

    def test_symmetric_axes_are_exactly_antisymmetric(self):
        g = PhaseGrid.symmetric(5.0, 65)
        assert np.all(g.x == -g.x[::-1])
        assert g.x[32] == 0.0

    def test_spacing(self):
        g = PhaseGrid(-6, 6, -3, 3, 129, 65)
        assert g.hx == pytest.approx(12 / 128)
        assert g.hp == pytest.approx(6 / 64)

    def test_refine_halves_spacing(self):
        g = PhaseGrid.symmetric(6.0, 129)
        r = g.refine()
        assert r.n_x == 257 and r.hx == pytest.approx(g.hx / 2)

    def test_default_grid_floor(self):
        assert default_grid(0.0).x_max == pytest.approx(6.0)
        assert default_grid(2.83).x_max == pytest.approx(2 * 2.83 + 4)


class TestFdWeights:
    def test_classic_stencils(self):
        assert fd_weights([-1, 0, 1], 1) == pytest.approx([-0.5, 0.0, 0.5])
        assert fd_weights([-1, 0, 1], 2) == pytest.approx([1.0, -2.0, 1.0])

    def test_eighth_order_first_derivative(self):
        w = fd_weights(np.arange(-4, 5), 1)
        expected = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0,
                             4 / 5, -1 / 5, 4 / 105, -1 / 280])
        assert np.max(np.abs(w - expected)) < 1e-12

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_polynomial_exactness(self, order):
        # a stencil on n nodes must differentiate degree-(n-1) polynomials exactly
        offsets = np.arange(-5, 6)
        w = fd_weights(offsets, order)
        rng = np.random.default_rng(7)
        coeffs = rng.normal(size=len(offsets))
        poly = np.polynomial.Polynomial(coeffs)
        exact = poly.deriv(order)(0.0)
        assert np.dot(w, poly(offsets.astype(float))) == pytest.approx(exact, rel=1e-9)


class TestDifferentiate:
    def test_constant_field_has_zero_derivative(self):
        g = PhaseGrid.symmetric(3.0, 65)
        ones = ScalarField(g, np.ones((65, 65)))
        assert np.max(np.abs(differentiate(ones, 1, 0).values)) < 1e-10
        assert np.max(np.abs(differentiate(ones, 0, 2).values)) < 1e-10

    def test_linear_ramp_exact(self):
        g = PhaseGrid.symmetric(3.0, 65)
        X, _ = g.mesh()
        ramp = ScalarField(g, 2.5 * X)
        d = differentiate(ramp, 1, 0)
        assert np.max(np.abs(d.values - 2.5)) < 1e-12

    def test_gaussian_laplacian_at_origin(self):
        # Lap[(1/pi) exp(-r^2)] = (1/pi)(4 r^2 - 4) exp(-r^2) -> -4/pi at 0
        g = PhaseGrid.symmetric(6.0, 129)
        lap = laplacian(gaussian_field(g))
        i = 64
        assert lap.values[i, i] == pytest.approx(-4 / np.pi, abs=1e-6)

    def test_linearity(self):
        g = PhaseGrid.symmetric(3.0, 65)
        X, P = g.mesh()
        a = ScalarField(g, np.sin(X) * P)
        b = ScalarField(g, np.cos(P) + X**2)
        lhs = differentiate(ScalarField(g, a.values + 3 * b.values), 1, 1)
        rhs = differentiate(a, 1, 1).values + 3 * differentiate(b, 1, 1).values
        assert np.max(np.abs(lhs.values - rhs)) < 5e-10

    def test_mixed_order_cap(self):
        g = PhaseGrid.symmetric(3.0, 65)
        with pytest.raises(GridError):
            differentiate(gaussian_field(g), 2, 2)

    def test_grid_too_small_for_stencil(self):
        g = PhaseGrid.symmetric(3.0, 33)
        ones = ScalarField(g, np.ones((33, 33)))
        differentiate(ones, 1, 0)  # fits
        with pytest.raises(GridError):
            differentiate(ones, 1, 0, acc=40)

    def test_radial_derivative_of_radial_function(self):
        # d/dr exp(-r^2) = -2 r exp(-r^2); origin node exactly 0
        g = PhaseGrid.symmetric(6.0, 129)
        X, P = g.mesh()
        R = np.hypot(X, P)
        fld = ScalarField(g, np.exp(-(R**2)))
        dr = radial_derivative(fld)
        expect = -2 * R * np.exp(-(R**2))
        inner = R < 3.0
        assert np.max(np.abs(dr.values[inner] - expect[inner])) < 1e-7
        assert dr.values[64, 64] == 0.0


class TestInterpolate:
    def test_exact_at_nodes(self):
        g = PhaseGrid.symmetric(6.0, 65)
        fld = gaussian_field(g)
        assert interpolate(fld, g.x[10], g.p[40]) == pytest.approx(
            fld.values[10, 40], abs=1e-14)

    def test_vacuum_gaussian_off_node(self):
        g = PhaseGrid.symmetric(6.0, 129)
        fld = gaussian_field(g)
        assert interpolate(fld, 0.5, 0.5) == pytest.approx(
            np.exp(-0.5) / np.pi, abs=1e-6)

    def test_reproduces_planes_exactly(self):
        g = PhaseGrid.symmetric(6.0, 65)
        X, P = g.mesh()
        plane = ScalarField(g, 0.7 * X - 1.3 * P + 0.2)
        val = interpolate(plane, 0.123, -0.456)
        assert val == pytest.approx(0.7 * 0.123 - 1.3 * -0.456 + 0.2, abs=1e-12)

    def test_out_of_box_raises(self):
        g = PhaseGrid.symmetric(2.0, 65)
        with pytest.raises(GridError):
            interpolate(gaussian_field(g), 2.5, 0.0)


def test_integrate_normalized_gaussian():
    g = PhaseGrid.symmetric(6.0, 129)
    assert integrate(gaussian_field(g)) == pytest.approx(1.0, abs=1e-6)
