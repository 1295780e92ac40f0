import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leastenergy.errors import ConsistencyViolation, DomainError, SubcriticalityWarning
from leastenergy.nonlinearity import (REGISTRY, Nonlinearity, check_gradient_consistency,
                                      check_sign_near_zero, check_subcriticality, eval_G, eval_g,
                                      make)

coords = st.floats(0.05, 3.0) | st.floats(-3.0, -0.05)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_gradients_match_finite_differences(name, rng):
    nl = make(name)
    pts = rng.uniform(0.1, 2.0, size=(200, nl.m)) * rng.choice([-1, 1], size=(200, nl.m))
    rep = check_gradient_consistency(nl, pts, tol=1e-6)
    assert rep.passed


@settings(max_examples=50, deadline=None)
@given(st.floats(2.5, 6.0), coords)
def test_double_power_consistency(q, s):
    nl = make("double_power", q=q, r=2.0)
    assert check_gradient_consistency(nl, [[s]], tol=1e-5).passed


@settings(max_examples=50, deadline=None)
@given(coords, coords)
def test_coupled_quartic_values(a, b):
    nl = make("coupled_quartic")
    assert eval_G(nl, [a, b]) == pytest.approx(a * a * b * b - (a * a + b * b) / 2)
    assert np.allclose(eval_g(nl, [a, b]), [2 * a * b * b - a, 2 * a * a * b - b])


def test_inconsistent_pair_reports_worst_point():
    bad = Nonlinearity("bad", 1, lambda u: u[0] ** 2 / 2, lambda u: 1.1 * u, "indefinite")
    pts = np.array([[0.5], [2.0], [1.0]])
    with pytest.raises(ConsistencyViolation) as exc:
        check_gradient_consistency(bad, pts)
    assert exc.value.worst_point[0] == 2.0
    rep = check_gradient_consistency(bad, pts, raise_on_fail=False)
    assert not rep.passed and len(rep.violators) == 3


def test_points_near_origin_rejected():
    with pytest.raises(DomainError):
        check_gradient_consistency(make("cubic"), [[1e-8]])


def test_sign_near_zero():
    for name in REGISTRY:
        assert check_sign_near_zero(make(name))
    liar = Nonlinearity("liar", 1, lambda u: u[0] ** 2, lambda u: 2 * u, "negative", 1.0)
    assert not check_sign_near_zero(liar)


def test_component_count_checked():
    with pytest.raises(DomainError):
        eval_G(make("coupled_quartic"), [1.0])


def test_unknown_name_and_bad_parameters():
    with pytest.raises(DomainError):
        make("quintic")
    with pytest.raises(DomainError):
        make("double_power", q=2.0, r=3.0)


def test_subcriticality_warning():
    with pytest.warns(SubcriticalityWarning):
        assert not check_subcriticality(make("double_power", q=4.0), 4, 2.0)
    assert check_subcriticality(make("cubic"), 3, 2.0)
    assert check_subcriticality(make("cubic"), 2, 2.0)  # p = N has no upper exponent
