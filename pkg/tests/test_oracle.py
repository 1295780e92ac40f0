import numpy as np
import pytest

from leastenergy.errors import BracketInvalid, DomainError
from leastenergy.functionals import ProblemSpec
from leastenergy.nonlinearity import make
from leastenergy.oracle import (CROSSES_ZERO, DECAYS, TURNS_BACK, ShootingThresholds,
                                ground_state, shoot)

CUBIC3 = ProblemSpec(3, 2.0, make("cubic"))


def test_cubic_ground_state(cubic_oracle):
    res = cubic_oracle
    assert res.classification == DECAYS
    # reference value for the radial cubic ground state in three dimensions
    assert res.u0 == pytest.approx(4.33738768, rel=1e-6)
    assert res.pohozaev_relative(3, 2.0) <= 1e-3
    # Pohozaev with alpha = 1: J = 3 V, so T_ref = J V^(-1/3) = 3^(1/3) V^(2/3)
    assert res.T_ref == pytest.approx(res.J_ref * res.V_ref ** (-1 / 3))
    prof = res.profile
    assert prof.values[0, 0] == pytest.approx(res.u0, rel=1e-6)
    assert np.all(np.diff(prof.values[0][prof.radii < 8]) <= 1e-12)


def test_step_halving_changes_T_ref_by_less_than_half_a_percent(cubic_oracle):
    fine = ground_state(CUBIC3, dr=5e-4)
    assert abs(fine.T_ref - cubic_oracle.T_ref) <= 5e-3 * fine.T_ref


def test_critical_ground_state_has_V_zero():
    spec = ProblemSpec(2, 2.0, make("cubic"))
    res = ground_state(spec)
    assert res.classification == DECAYS
    assert abs(res.V_ref) <= 1e-3 * res.J_ref
    assert res.T_ref == res.J_ref


def test_other_exponent():
    res = ground_state(ProblemSpec(3, 2.5, make("cubic")))
    assert res.classification == DECAYS
    assert res.pohozaev_relative(3, 2.5) <= 1e-3


def test_trajectory_classes():
    assert shoot(CUBIC3, 0.1).classification == TURNS_BACK
    over = shoot(CUBIC3, 10.0)
    assert over.classification == CROSSES_ZERO and over.crosses_zero
    # g = -u has no positive decaying solution: every start turns back
    lin = ProblemSpec(3, 2.0, make("linear"))
    assert shoot(lin, 1.0).classification == TURNS_BACK


def test_errors():
    with pytest.raises(DomainError):
        shoot(ProblemSpec(3, 2.0, make("coupled_quartic")), 1.0)
    with pytest.raises(DomainError):
        shoot(CUBIC3, -1.0)
    with pytest.raises(BracketInvalid):
        ground_state(CUBIC3, bracket=(5.0, 10.0))  # both ends overshoot
    with pytest.raises(BracketInvalid):
        ground_state(CUBIC3, bracket=(2.0, 1.0))
    with pytest.raises(BracketInvalid):
        ground_state(ProblemSpec(3, 2.0, make("linear")))


def test_thresholds_are_configurable():
    th = ShootingThresholds(cross=1e-10, decay=1e-8, blowup=1e3)
    assert shoot(CUBIC3, 10.0, thresholds=th).classification in (CROSSES_ZERO, "blows_up")
