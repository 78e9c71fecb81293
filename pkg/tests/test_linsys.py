"""State-space algebra and norm tests against analytic oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointbudget.errors import (
    AlgebraicLoopError,
    DimensionError,
    ModelError,
    NumericalError,
    UnstableSystemError,
)
from pointbudget.linsys import (
    FrequencyGrid,
    StateSpaceModel,
    dc_gain,
    feedback,
    frequency_response,
    h2_norm,
    hinf_norm,
    is_stable,
    series,
    ss,
    static_gain,
    submodel,
)

TWO_PI = 2.0 * np.pi


def lag(pole: float, gain: float = 1.0) -> StateSpaceModel:
    """gain / (s + pole)"""
    return ss([[-pole]], [[1.0]], [[gain]], [[0.0]])


def second_order(wn: float, zeta: float, num: float) -> StateSpaceModel:
    """num / (s^2 + 2 zeta wn s + wn^2)"""
    a = [[0.0, 1.0], [-wn * wn, -2.0 * zeta * wn]]
    return ss(a, [[0.0], [1.0]], [[num, 0.0]], [[0.0]])


class TestConstruction:
    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            ss([[0.0, 1.0]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(DimensionError):
            ss([[0.0]], [[1.0], [1.0]], [[1.0]], [[0.0]])
        with pytest.raises(DimensionError):
            ss([[0.0]], [[1.0]], [[1.0, 2.0]], [[0.0]])

    def test_rejects_non_finite(self):
        with pytest.raises(ModelError):
            ss([[np.nan]], [[1.0]], [[1.0]], [[0.0]])

    def test_immutable(self):
        g = lag(1.0)
        with pytest.raises(ValueError):
            g.a[0, 0] = 5.0

    def test_default_names(self):
        g = ss([[-1.0]], [[1.0, 2.0]], [[1.0]], [[0.0, 0.0]])
        assert g.input_names == ("u0", "u1")
        assert g.output_names == ("y0",)


class TestFrequencyGrid:
    def test_validation(self):
        with pytest.raises(ModelError):
            FrequencyGrid([1.0])
        with pytest.raises(ModelError):
            FrequencyGrid([0.0, 1.0])
        with pytest.raises(ModelError):
            FrequencyGrid([1.0, 1.0])
        g = FrequencyGrid.log_spaced(1e-3, 1e3, 50)
        assert len(g) == 50


class TestSeries:
    def test_static_gains_multiply(self):
        g = series(static_gain(2.0), static_gain(3.0))
        assert dc_gain(g)[0, 0] == pytest.approx(6.0)

    def test_unity_dc_cascade(self):
        g = series(lag(1.0), lag(1.0))
        assert dc_gain(g)[0, 0] == pytest.approx(1.0)

    def test_lowpass_washout_product_at_unit_omega(self):
        # |1/(s+1) * s/(s+1)| at s = i equals |i| / |1+i|^2 = 0.5
        washout = ss([[-1.0]], [[1.0]], [[-1.0]], [[1.0]])  # s/(s+1)
        g = series(lag(1.0), washout)
        f = 1.0 / TWO_PI
        mag = np.abs(frequency_response(g, np.array([f]))[0, 0, 0])
        assert mag == pytest.approx(0.5, rel=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            series(static_gain(np.ones((2, 1))), static_gain(np.ones((1, 3))))

    def test_response_composition(self):
        g1 = second_order(2.0, 0.3, 4.0)
        g2 = lag(0.5, 2.0)
        grid = FrequencyGrid.log_spaced(1e-3, 1e2, 40)
        left = frequency_response(series(g1, g2), grid)[:, 0, 0]
        right = frequency_response(g2, grid)[:, 0, 0] * frequency_response(g1, grid)[:, 0, 0]
        np.testing.assert_allclose(left, right, rtol=1e-9)


class TestFeedback:
    def test_integrator_proportional(self):
        # y = G K (r - y) with G = 1/s, K = k gives k/(s+k), unity DC
        g = feedback(ss([[0.0]], [[1.0]], [[1.0]], [[0.0]]), static_gain(4.0), sign=-1)
        assert is_stable(g)
        assert dc_gain(g)[0, 0] == pytest.approx(1.0)
        np.testing.assert_allclose(np.linalg.eigvals(g.a), [-4.0])

    def test_double_integrator_pd(self):
        # plant 1/s^2 with outputs (theta, rate); PD gains [1, 1.4]
        plant = ss([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]],
                   [[1.0, 0.0], [0.0, 1.0]], [[0.0], [0.0]])
        pd = static_gain([[1.0, 1.4]])
        cl = feedback(plant, pd, sign=-1)
        assert is_stable(cl)
        expected = np.roots([1.0, 1.4, 1.0])
        got = np.sort_complex(np.linalg.eigvals(cl.a))
        np.testing.assert_allclose(got, np.sort_complex(expected), rtol=1e-9)

    def test_singular_loop(self):
        with pytest.raises(AlgebraicLoopError):
            feedback(static_gain(1.0), static_gain(1.0), sign=+1)

    def test_response_composition(self):
        plant = second_order(3.0, 0.2, 9.0)
        ctrl = lag(2.0, 5.0)
        cl = feedback(plant, ctrl, sign=-1)
        grid = FrequencyGrid.log_spaced(1e-2, 1e2, 50)
        resp_cl = frequency_response(cl, grid)[:, 0, 0]
        gp = frequency_response(plant, grid)[:, 0, 0]
        gk = frequency_response(ctrl, grid)[:, 0, 0]
        np.testing.assert_allclose(resp_cl, gp * gk / (1.0 + gp * gk), rtol=1e-9)


class TestStability:
    def test_stable_scalar(self):
        assert is_stable(ss([[-1.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_marginal_pole(self):
        assert not is_stable(ss([[0.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_unstable(self):
        assert not is_stable(ss([[1e-6]], [[1.0]], [[1.0]], [[0.0]]))


class TestDcGain:
    def test_first_order(self):
        assert dc_gain(lag(2.0))[0, 0] == pytest.approx(0.5)

    def test_unity_dc_second_order(self):
        g = second_order(2.0, 0.5, 4.0)
        assert dc_gain(g)[0, 0] == pytest.approx(1.0)

    def test_pole_at_origin(self):
        with pytest.raises(NumericalError):
            dc_gain(ss([[0.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_matches_low_frequency_response(self):
        g = second_order(5.0, 0.4, 12.5)
        low = frequency_response(g, np.array([1e-9]))[0, 0, 0]
        assert abs(low - dc_gain(g)[0, 0]) <= 1e-6 * abs(dc_gain(g)[0, 0])


class TestH2Norm:
    def test_first_order_analytic(self):
        # ||1/(s+a)||_2 = 1/sqrt(2a)
        assert h2_norm(lag(1.0)) == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-9)
        assert h2_norm(lag(2.0)) == pytest.approx(0.5, rel=1e-9)

    def test_first_order_against_quadrature(self):
        g = lag(2.0)
        f = np.logspace(-6, 5, 200000)
        mag2 = 1.0 / (4.0 + (TWO_PI * f) ** 2)
        two_sided = 2.0 * np.trapezoid(mag2, f)
        assert h2_norm(g) == pytest.approx(np.sqrt(two_sided), rel=1e-4)

    def test_second_order_analytic(self):
        # ||wn^2/(s^2+2 zeta wn s + wn^2)||_2 = sqrt(wn/(4 zeta))
        wn, zeta = 1.0, 0.5
        g = second_order(wn, zeta, wn * wn)
        assert h2_norm(g) == pytest.approx(np.sqrt(wn / (4 * zeta)), rel=1e-9)

    def test_requires_strictly_proper(self):
        with pytest.raises(ModelError):
            h2_norm(ss([[-1.0]], [[1.0]], [[1.0]], [[1.0]]))

    def test_requires_stable(self):
        with pytest.raises(UnstableSystemError):
            h2_norm(ss([[1.0]], [[1.0]], [[1.0]], [[0.0]]))


class TestHinfNorm:
    def test_static_gain(self):
        assert hinf_norm(static_gain(3.0)) == pytest.approx(3.0, rel=1e-6)

    def test_first_order_peak_at_dc(self):
        assert hinf_norm(lag(1.0)) == pytest.approx(1.0, rel=1e-6)

    def test_resonant_second_order(self):
        # peak of 1/(s^2 + 2 zeta s + 1) is 1/(2 zeta sqrt(1-zeta^2))
        zeta = 0.1
        g = second_order(1.0, zeta, 1.0)
        expected = 1.0 / (2.0 * zeta * np.sqrt(1.0 - zeta * zeta))
        assert hinf_norm(g) == pytest.approx(expected, rel=1e-4)

    def test_requires_stable(self):
        with pytest.raises(UnstableSystemError):
            hinf_norm(ss([[0.1]], [[1.0]], [[1.0]], [[0.0]]))

    def test_bounds_grid_response(self):
        g = second_order(4.0, 0.05, 16.0)
        grid = FrequencyGrid.log_spaced(1e-3, 1e3, 600)
        peak_on_grid = np.abs(frequency_response(g, grid)).max()
        assert hinf_norm(g) >= peak_on_grid * (1.0 - 1e-9)


class TestSubmodel:
    def test_channel_selection(self):
        g = ss([[-1.0]], [[1.0, 2.0]], [[1.0], [3.0]], np.zeros((2, 2)),
               inputs=("a", "b"), outputs=("p", "q"))
        sub = submodel(g, outputs=["q"], inputs=["b"])
        assert sub.input_names == ("b",)
        assert sub.output_names == ("q",)
        assert sub.b[0, 0] == 2.0
        assert sub.c[0, 0] == 3.0


@st.composite
def stable_siso(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    poles = [draw(st.floats(min_value=0.05, max_value=20.0)) for _ in range(n)]
    gains = [draw(st.floats(min_value=-5.0, max_value=5.0)) for _ in range(n)]
    a = np.diag([-p for p in poles])
    b = np.ones((n, 1))
    c = np.array([gains])
    return ss(a, b, c, [[0.0]])


class TestProperties:
    @settings(max_examples=25, deadline=None)
    @given(stable_siso(), st.floats(min_value=-4.0, max_value=4.0))
    def test_norm_homogeneity(self, g, alpha):
        scaled = ss(g.a, g.b, alpha * g.c, g.d)
        assert h2_norm(scaled) == pytest.approx(abs(alpha) * h2_norm(g), rel=1e-7, abs=1e-12)
        assert hinf_norm(scaled) == pytest.approx(abs(alpha) * hinf_norm(g), rel=1e-4, abs=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(stable_siso())
    def test_parseval_consistency(self, g):
        # H2 norm squared equals the two-sided frequency integral within 1%
        f = np.logspace(-5, 4, 20000)
        mag2 = np.abs(frequency_response(g, f)[:, 0, 0]) ** 2
        integral = 2.0 * np.trapezoid(mag2, f)
        h2_sq = h2_norm(g) ** 2
        assert integral == pytest.approx(h2_sq, rel=0.01, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(stable_siso())
    def test_hinf_dominates_grid(self, g):
        grid = FrequencyGrid.log_spaced(1e-4, 1e3, 300)
        peak = np.abs(frequency_response(g, grid)).max()
        assert hinf_norm(g) >= peak * (1.0 - 1e-7)

    @settings(max_examples=20, deadline=None)
    @given(stable_siso())
    def test_dc_matches_response(self, g):
        dc = dc_gain(g)[0, 0]
        low = frequency_response(g, np.array([1e-9]))[0, 0, 0]
        assert abs(low - dc) <= 1e-6 * max(abs(dc), 1e-12)
