import logging
import math

import numpy as np
import pytest
from pydantic.v1 import ValidationError

from polarity_lab.core.kinetics import (
    SPHERE_MASS_FACTOR,
    KineticParams,
    equilibrium_search,
    f_react,
    find_equilibria,
    jacobian,
    mass_residual,
    q_sorp,
    stability_value_S,
    verify_sign_conditions,
)
from polarity_lab.core.typedefs import Jacobian


def test_default_params_are_the_single_spot_set(base_params: KineticParams):
    assert base_params.gamma == 400.0
    assert base_params.D == 100.0
    assert base_params.V_init == 5.1
    assert not base_params.reduced


@pytest.mark.parametrize(
    "changes",
    [{"d": -1.0}, {"gamma": 0.0}, {"a4": math.nan}, {"V_init": -0.1}, {"D": 0.0}],
)
def test_invalid_params_are_rejected(changes):
    with pytest.raises(ValidationError):
        KineticParams(**changes)


def test_attachment_rate_must_increase():
    with pytest.raises(ValidationError, match="a1 must be smaller than a3"):
        KineticParams(a1=200.0)


def test_unknown_params_are_rejected():
    with pytest.raises(ValidationError):
        KineticParams(k1=1.0)


def test_infinite_D_selects_the_reduced_model():
    assert KineticParams(D=math.inf).reduced


def test_params_are_immutable(base_params: KineticParams):
    with pytest.raises(TypeError):
        base_params.gamma = 40.0


def test_replace_validates_and_keeps_other_fields(base_params: KineticParams):
    changed = base_params.replace(gamma=40.0)
    assert changed.gamma == 40.0
    assert changed.a3 == base_params.a3
    assert base_params.gamma == 400.0
    with pytest.raises(ValidationError):
        base_params.replace(a5=-1.0)


def test_f_react_without_active_gtpase_is_basal_activation(
    base_params: KineticParams,
):
    assert f_react(0.0, 0.3, base_params) == pytest.approx(0.02 * 0.3)


def test_f_react_reference_values(base_params: KineticParams):
    assert f_react(1.0, 1.0, base_params) == pytest.approx(
        0.02 + 159.98 / 21 - 1 / 1.5, rel=1e-12
    )
    assert q_sorp(0.0, 0.0, 5.1, base_params) == pytest.approx(0.36 * 5.1)


def test_jacobian_at_the_origin(base_params: KineticParams):
    assert jacobian(0.0, 0.0, 1.0, base_params).f_u == pytest.approx(-2.0)


def test_q_sorp_clamps_attachment_above_saturation(base_params: KineticParams):
    assert q_sorp(0.6, 0.6, 2.0, base_params) == pytest.approx(-5.0 * 0.6)


def test_reaction_terms_broadcast_over_arrays(base_params: KineticParams):
    u = np.linspace(0.0, 0.5, 7)
    assert f_react(u, 0.1, base_params).shape == (7,)
    assert q_sorp(u, 0.1, 1.0, base_params).shape == (7,)


def test_jacobian_matches_finite_differences(base_params: KineticParams):
    u, v, V, h = 0.21, 0.33, 2.5, 1e-6
    jac = jacobian(u, v, V, base_params)

    def diff(fn, *shifted):
        return (fn(*shifted[0]) - fn(*shifted[1])) / (2 * h)

    p = base_params
    assert jac.f_u == pytest.approx(
        diff(lambda *a: f_react(*a, p), (u + h, v), (u - h, v)), rel=1e-6
    )
    assert jac.f_v == pytest.approx(
        diff(lambda *a: f_react(*a, p), (u, v + h), (u, v - h)), rel=1e-6
    )
    assert jac.q_u == pytest.approx(
        diff(lambda *a: q_sorp(*a, p), (u + h, v, V), (u - h, v, V)), rel=1e-6
    )
    assert jac.q_v == pytest.approx(
        diff(lambda *a: q_sorp(*a, p), (u, v + h, V), (u, v - h, V)), rel=1e-6
    )
    assert jac.q_V == pytest.approx(
        diff(lambda *a: q_sorp(*a, p), (u, v, V + h), (u, v, V - h)), rel=1e-6
    )
    assert not jac.kink


def test_jacobian_above_saturation_drops_attachment(base_params: KineticParams):
    jac = jacobian(0.7, 0.6, 2.0, base_params)
    assert jac.q_u == 0.0
    assert jac.q_v == -base_params.a_m6
    assert jac.q_V == 0.0


def test_jacobian_on_the_saturation_line_is_flagged(
    base_params: KineticParams, caplog
):
    with caplog.at_level(logging.WARNING):
        jac = jacobian(0.5, 0.5, 2.0, base_params)
    assert jac.kink
    assert jac.q_u == -base_params.a6 * 2.0
    assert "kink" in caplog.text


def test_reference_set_has_a_single_equilibrium(base_params: KineticParams):
    equilibria = find_equilibria(base_params)
    assert len(equilibria) == 1
    eq = equilibria[0]
    assert 0.15 < eq.u_star < 0.25
    assert 0.15 < eq.v_star < 0.25
    assert eq.V_star == pytest.approx(
        base_params.V_init - SPHERE_MASS_FACTOR * (eq.u_star + eq.v_star)
    )
    assert abs(eq.residual_f) < 1e-10
    assert abs(eq.residual_q) < 1e-10


def test_equilibrium_residuals_recompute(base_equilibrium, base_params):
    eq = base_equilibrium
    assert abs(f_react(eq.u_star, eq.v_star, base_params)) < 1e-10
    assert abs(q_sorp(eq.u_star, eq.v_star, eq.V_star, base_params)) < 1e-10


def test_reference_search_is_bracketed(base_params: KineticParams):
    search = equilibrium_search(base_params)
    assert not search.bracket_overflow
    assert not search.no_equilibrium
    assert search.n_grid == 10_000
    assert mass_residual(1.0, base_params) < 0


def test_base_equilibrium_satisfies_strict_sign_conditions(
    base_equilibrium,
):
    report = verify_sign_conditions(base_equilibrium)
    assert report.weak
    assert report.strict
    assert stability_value_S(base_equilibrium) > 0


def test_rich_dynamics_set_has_several_equilibria(oscillatory_params: KineticParams):
    equilibria = find_equilibria(oscillatory_params)
    assert len(equilibria) >= 2
    assert all(eq.V_star >= 0 for eq in equilibria)
    assert [eq.u_star for eq in equilibria] == sorted(eq.u_star for eq in equilibria)


def test_no_cytosol_leaves_only_the_empty_state(base_params: KineticParams):
    equilibria = find_equilibria(base_params.replace(V_init=0.0))
    assert len(equilibria) == 1
    assert equilibria[0].u_star == 0.0
    assert equilibria[0].V_star == 0.0


def test_sign_conditions_detect_violations():
    report = verify_sign_conditions(
        Jacobian(f_u=1.0, f_v=2.0, q_u=-3.0, q_v=-1.0, q_V=0.5)
    )
    assert not report.q_v_le_q_u
    assert not report.weak
    assert not report.strict


def test_weak_conditions_allow_zero_derivatives():
    report = verify_sign_conditions(
        Jacobian(f_u=1.0, f_v=0.0, q_u=0.0, q_v=0.0, q_V=0.0)
    )
    assert report.weak
    assert not report.strict


def test_stability_value_S_of_a_synthetic_jacobian():
    jac = Jacobian(f_u=1.0, f_v=2.0, q_u=-1.0, q_v=-3.0, q_V=0.5)
    assert stability_value_S(jac) == pytest.approx(1.0 / 6.0)
