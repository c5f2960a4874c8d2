import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geonet.activations import (
    LeakyReLU,
    PolynomialLayer,
    PReLU,
    RBFLayer,
    leaky_relu,
    leaky_relu_grad,
    parse_activation,
    rbf_init_centers,
)
from geonet.layers import Affine
from geonet.numkit import ShapeError, make_rng

from gradcheck import probe_layer


def test_poly_degree_one_is_linear():
    layer = PolynomialLayer(2, 1, 1, weights=[[2.0], [3.0]])
    assert layer.forward(np.array([[1.0, 1.0]]))[0][0, 0] == 5.0


def test_poly_square_plus_bias():
    layer = PolynomialLayer(1, 1, 2, weights=[[1.0]], bias=[1.0])
    assert layer.forward(np.array([[3.0]]))[0][0, 0] == 10.0


@pytest.mark.parametrize("degree", [1, 2, 3, 5])
def test_poly_zero_input_gives_bias(degree):
    layer = PolynomialLayer(4, 3, degree, make_rng(0), bias=[1.0, -2.0, 0.5])
    np.testing.assert_array_equal(layer.forward(np.zeros((2, 4)))[0], [[1.0, -2.0, 0.5]] * 2)


def test_poly_input_gradient_hand_value():
    layer = PolynomialLayer(1, 1, 2, weights=[[1.0]])
    _, cache = layer.forward(np.array([[3.0]]))
    grad_x, _ = layer.backward(cache, np.ones((1, 1)))
    assert grad_x[0, 0] == 6.0


def test_poly_degree_one_matches_affine():
    r = make_rng(3)
    w, b = r.normal(size=(4, 3)), r.normal(size=3)
    x, up = r.normal(size=(5, 4)), r.normal(size=(5, 3))
    poly, aff = PolynomialLayer(4, 3, 1, weights=w, bias=b), Affine(4, 3, weights=w, bias=b)
    (yp, cp), (ya, ca) = poly.forward(x), aff.forward(x)
    np.testing.assert_array_equal(yp, ya)
    gp, gpp = poly.backward(cp, up)
    ga, gap = aff.backward(ca, up)
    np.testing.assert_array_equal(gp, ga)
    for k in ("W", "b"):
        np.testing.assert_array_equal(gpp[k], gap[k])


@pytest.mark.parametrize("degree", [0, -1, 2.5])
def test_poly_rejects_bad_degree(degree):
    with pytest.raises(ValueError):
        PolynomialLayer(2, 2, degree)


def test_poly_shape_mismatch():
    with pytest.raises(ShapeError):
        PolynomialLayer(3, 2).forward(np.ones((1, 2)))


def _layers(rng):
    centers = rng.normal(size=(6, 3))
    return [
        PolynomialLayer(3, 4, 3, rng),
        PolynomialLayer(3, 4, 2, rng),
        RBFLayer(centers, 1.3, 2, rng),
        RBFLayer(centers, rng.uniform(0.5, 2, 6), 2, rng, trainable_centers=True),
        LeakyReLU(3, 0.01),
        PReLU(3, 0.2),
    ]


@pytest.mark.parametrize("which", range(6))
def test_layer_gradients_match_finite_differences(which):
    rng = make_rng(100 + which)
    layer = _layers(rng)[which]
    # trainable spreads have large third derivatives; a finer step keeps the oracle's own truncation error down
    step = 1e-5 if getattr(layer, "trainable_centers", False) else 1e-4
    errors = []
    for _ in range(20):
        x = rng.normal(size=(5, 3))
        # keep inputs off the ReLU kink so the difference quotient is smooth
        x[np.abs(x) < 1e-2] += 0.1
        errors += probe_layer(layer, x, rng, 6, step)
    assert len(errors) >= 100
    assert max(errors) < 1e-5


def test_rbf_unit_at_center():
    layer = RBFLayer([[1.0, 2.0]], 0.7, 1)
    assert layer.activations(np.array([[1.0, 2.0]]))[0, 0] == 1.0


def test_rbf_at_sigma_root_two():
    sigma = 0.8
    layer = RBFLayer([[0.0, 0.0]], sigma, 1)
    x = np.array([[sigma * np.sqrt(2.0), 0.0]])
    assert layer.activations(x)[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0.0, 10.0), st.floats(0.001, 5.0))
def test_rbf_monotone_in_distance(sigma, r, dr):
    layer = RBFLayer([[0.0]], sigma, 1)
    near, far = layer.activations(np.array([[r], [r + dr]]))[:, 0]
    assert 0.0 <= far <= near <= 1.0
    if near > 1e-300:
        assert far < near


def test_rbf_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        RBFLayer([[0.0]], 0.0, 1)


def test_rbf_init_two_centers_spread():
    layer = rbf_init_centers(np.array([[0.0, 0.0], [2.0, 0.0]]), 2, make_rng(0))
    np.testing.assert_allclose(layer.sigma, [2.0, 2.0])


def test_rbf_init_all_points_is_permutation():
    data = make_rng(1).normal(size=(7, 2))
    layer = rbf_init_centers(data, 7, make_rng(2))
    assert sorted(map(tuple, layer.centers.tolist())) == sorted(map(tuple, data.tolist()))


def test_rbf_init_deterministic_and_single_center():
    data = make_rng(1).normal(size=(20, 2))
    a, b = rbf_init_centers(data, 5, make_rng(3)), rbf_init_centers(data, 5, make_rng(3))
    np.testing.assert_array_equal(a.centers, b.centers)
    assert rbf_init_centers(data, 1, make_rng(0)).sigma.tolist() == [1.0]


def test_rbf_init_too_many_units():
    with pytest.raises(ValueError):
        rbf_init_centers(np.zeros((3, 2)), 4)


def test_leaky_relu_values():
    assert leaky_relu(5.0) == 5.0
    assert leaky_relu(-10.0, 0.01) == pytest.approx(-0.1)
    assert leaky_relu(0.0) == 0.0
    eps = 1e-12
    assert abs(leaky_relu(eps) - leaky_relu(-eps)) < 1e-11


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(1e-4, 0.99))
def test_leaky_relu_gradient_never_zero(x, alpha):
    assert leaky_relu_grad(x, 1.0, alpha) != 0.0


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_leaky_relu_rejects_alpha(alpha):
    with pytest.raises(ValueError):
        LeakyReLU(3, alpha)


def test_prelu_alpha_is_learnable_and_clipped():
    layer = PReLU(2, 0.01)
    _, grads = layer.backward(np.array([[-1.0, 2.0]]), np.ones((1, 2)))
    assert grads["alpha"][0] == -1.0
    layer.params["alpha"][0] = 3.0
    layer.constrain()
    assert 0 < layer.alpha_value < 1


@pytest.mark.parametrize("spec,expected", [
    ("poly:3", ("poly", 3)),
    ("rbf:16", ("rbf", 16)),
    ("lrelu:0.01", ("lrelu", 0.01)),
    ("prelu", ("prelu", None)),
])
def test_parse_activation(spec, expected):
    assert parse_activation(spec) == expected


def test_parse_activation_defaults():
    assert parse_activation("poly") == ("poly", 3)
    assert parse_activation("lrelu") == ("lrelu", 0.01)


@pytest.mark.parametrize("spec", ["poly:0", "rbf:x", "lrelu:2", "tanh", "prelu:3"])
def test_parse_activation_rejects(spec):
    with pytest.raises(ValueError):
        parse_activation(spec)
