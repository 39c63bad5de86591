import numpy as np
import pytest
from mpmath import mp

from proxtik import GscRadius, LossModel, gsc_radius, loss_derivatives, loss_value

mp.dps = 40


def hp_logistic(y, z):
    """High-precision logistic loss oracle."""
    return float(mp.log(1 + mp.exp(-y * mp.mpf(z))))


def test_loss_value_logistic_symmetry_at_zero(logistic):
    assert loss_value(logistic, 1, 0.0) == pytest.approx(np.log(2), rel=1e-15)


def test_loss_value_squared_zero_residual(squared):
    assert loss_value(squared, 2.0, 2.0) == 0.0


def test_loss_value_logistic_high_precision(logistic):
    # log(1 + e^3) = 3.0485873515737420...
    assert loss_value(logistic, -1, 3.0) == pytest.approx(3.048587351573742, rel=1e-14)
    for y in (-1.0, 1.0):
        for z in (-7.3, -0.2, 0.9, 4.4, 42.0):
            assert loss_value(logistic, y, z) == pytest.approx(hp_logistic(y, z), rel=1e-13)


def test_loss_value_no_overflow_deep_tail(logistic):
    assert np.isfinite(loss_value(logistic, 1.0, -700.0))
    assert np.isfinite(loss_value(logistic, -1.0, 700.0))


def test_derivatives_logistic_at_zero(logistic):
    d1, d2, d3 = loss_derivatives(logistic, 1, 0.0)
    assert d1 == pytest.approx(-0.5, abs=1e-16)
    assert d2 == pytest.approx(0.25, abs=1e-16)
    assert d3 == pytest.approx(0.0, abs=1e-16)


def test_derivatives_squared(squared):
    d1, d2, d3 = loss_derivatives(squared, 1, 0.0)
    assert (d1, d2, d3) == (-1.0, 1.0, 0.0)


def test_derivatives_logistic_sigmoid_product(logistic):
    # sigma(2)(1 - sigma(2)) = 0.10499358540350651...
    _, d2, _ = loss_derivatives(logistic, 1, 2.0)
    assert d2 == pytest.approx(0.10499358540350652, rel=1e-14)


@pytest.mark.parametrize("kind", ["logistic", "squared"])
def test_derivatives_match_finite_differences(kind):
    """d1/d2/d3 agree with central differences of the order below."""
    model = LossModel(kind)
    y_values = (-1.0, 1.0) if kind == "logistic" else (-1.3, 0.0, 2.4)
    grid = np.array([-4.7, -3.1, -1.8, -0.9, -0.3, 0.6, 1.7, 2.9, 4.2])
    h = 1e-6

    def agree(numeric, analytic):
        return abs(numeric - analytic) <= 1e-6 * max(1.0, abs(analytic))

    for y in y_values:
        for z in grid:
            d1, d2, d3 = loss_derivatives(model, y, z)
            fd1 = (loss_value(model, y, z + h) - loss_value(model, y, z - h)) / (2 * h)
            fd2 = (loss_derivatives(model, y, z + h)[0] - loss_derivatives(model, y, z - h)[0]) / (2 * h)
            fd3 = (loss_derivatives(model, y, z + h)[1] - loss_derivatives(model, y, z - h)[1]) / (2 * h)
            assert agree(fd1, d1), (y, z)
            assert agree(fd2, d2), (y, z)
            assert agree(fd3, d3), (y, z)


def test_logistic_scalar_self_concordance(logistic):
    """|d3| <= d2 on a wide grid: the scalar form of the defining inequality."""
    z = np.linspace(-30, 30, 10_000)
    for y in (-1.0, 1.0):
        _, d2, d3 = loss_derivatives(logistic, np.full_like(z, y), z)
        assert np.all(np.abs(d3) <= d2 + 1e-15)
        assert np.all(d2 >= 0)


def test_squared_third_derivative_vanishes(squared):
    z = np.linspace(-30, 30, 101)
    _, d2, d3 = loss_derivatives(squared, np.zeros_like(z), z)
    assert np.all(d3 == 0)
    assert np.all(d2 == 1.0)


def test_gsc_radius_squared_is_zero(squared):
    assert gsc_radius(squared, [0.5, 2.0, 7.0]).value == 0.0


def test_gsc_radius_logistic_constant_diag(logistic):
    # sqrt(13/12) = 1.0408329997330663...
    rad = gsc_radius(logistic, np.full(5, 13 / 12))
    assert rad.value == pytest.approx(1.0408329997330663, rel=1e-15)


def test_gsc_radius_logistic_max(logistic):
    assert gsc_radius(logistic, [1.0, 4.0]).value == 2.0


def test_gsc_radius_rejects_bad_diagonals(logistic):
    with pytest.raises(ValueError, match="empty"):
        gsc_radius(logistic, [])
    with pytest.raises(ValueError, match="nonnegative"):
        gsc_radius(logistic, [1.0, -0.1])


def test_logistic_rejects_zero_one_labels(logistic):
    with pytest.raises(ValueError, match="0/1"):
        loss_value(logistic, np.array([0.0, 1.0]), np.zeros(2))
    with pytest.raises(ValueError):
        loss_derivatives(logistic, 2.0, 0.0)


def test_squared_accepts_real_labels(squared):
    assert loss_value(squared, -3.7, 0.0) == pytest.approx(0.5 * 3.7**2)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown loss kind"):
        LossModel("hinge")


def test_radius_type_validation():
    with pytest.raises(ValueError):
        GscRadius(-1.0)
    with pytest.raises(ValueError):
        GscRadius(float("nan"))
