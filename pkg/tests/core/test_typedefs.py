from dataclasses import FrozenInstanceError, is_dataclass

import pytest

from polarity_lab.core.typedefs import (
    DispersionReport,
    Eigenvalue,
    Equilibrium,
    EquilibriumSearch,
    GrowthRatePoint,
    Jacobian,
    ModeIndex,
    SignConditionReport,
    StabilityReport,
    Verdict,
)


def test_equilibrium_is_dataclass():
    assert is_dataclass(Equilibrium)


def test_dispersion_degree_is_a_mode_index():
    assert ModeIndex == DispersionReport.__annotations__["l"]


def test_growth_rate_points_carry_an_eigenvalue():
    assert Eigenvalue == GrowthRatePoint.__annotations__["mu"]


def test_jacobian_determinant():
    jacobian = Jacobian(f_u=2.0, f_v=1.0, q_u=-1.0, q_v=-2.0, q_V=0.1)
    assert jacobian.determinant == -3.0


def test_jacobian_is_immutable():
    jacobian = Jacobian(f_u=2.0, f_v=1.0, q_u=-1.0, q_v=-2.0, q_V=0.1)
    with pytest.raises(FrozenInstanceError):
        jacobian.f_u = 0.0  # type: ignore


def test_equilibrium_exposes_its_jacobian_entries():
    jacobian = Jacobian(f_u=0.3, f_v=1.5, q_u=-1.4, q_v=-6.4, q_V=0.2)
    eq = Equilibrium(u_star=0.2, v_star=0.2, V_star=4.0, jacobian=jacobian)
    assert (eq.f_u, eq.f_v, eq.q_u, eq.q_v, eq.q_V) == (0.3, 1.5, -1.4, -6.4, 0.2)


def test_strict_sign_conditions_need_the_weak_ones():
    report = SignConditionReport(
        f_v_nonneg=True,
        q_v_nonpos=True,
        q_v_le_q_u=False,
        q_V_nonneg=True,
        f_v_pos=True,
        q_v_neg=True,
        q_V_pos=True,
    )
    assert not report.weak
    assert not report.strict


def test_empty_search_has_no_equilibrium():
    assert EquilibriumSearch((), 1.0, 100, bracket_overflow=False).no_equilibrium


def test_verdicts_render_as_their_names():
    assert Verdict.NOT_APPLICABLE.value == "NotApplicable"


def test_stability_report_defaults_to_no_unstable_modes():
    assert StabilityReport.__dataclass_fields__["unstable_modes"].default == ()
