from typing import Iterator

import numpy as np
import pytest
from pydantic.v1 import ValidationError

from polarity_lab.core.exceptions import DomainError, SignConditionViolation
from polarity_lab.core.kinetics import KineticParams
from polarity_lab.core.linstab_reduced import (
    SpectrumSpec,
    classify_case_reduced,
    full_vs_reduced_consistency,
    growth_rate_curve,
    most_unstable_mode,
    ode_stability,
    quadratic_dispersion_roots,
    reduced_dispersion,
    reduced_stability,
)
from polarity_lab.core.typedefs import Case, Equilibrium, Jacobian, Verdict


@pytest.fixture
def sphere() -> SpectrumSpec:
    return SpectrumSpec.sphere(20)


@pytest.mark.parametrize("eigenvalues", [(), (0.0, 2.0), (2.0, 2.0), (6.0, 2.0)])
def test_spectrum_must_be_positive_and_increasing(eigenvalues):
    with pytest.raises(ValidationError):
        SpectrumSpec(eigenvalues=eigenvalues)


def test_spectrum_mass_factor_must_be_positive():
    with pytest.raises(ValidationError):
        SpectrumSpec(eigenvalues=(1.0,), c_times_area=0.0)


def test_sphere_spectrum():
    spec = SpectrumSpec.sphere()
    assert len(spec.eigenvalues) == 200
    assert spec.eigenvalues[-1] == 200 * 201
    assert spec.c_times_area == 3.0


def test_reference_state_is_ode_stable(base_equilibrium, sphere):
    result = ode_stability(base_equilibrium, sphere)
    assert result.verdict is Verdict.STABLE
    assert result.trace < 0
    assert result.determinant > 0
    assert result.f_u_lt_f_v
    assert result.determinant_implies_trace


def test_ode_determinant_on_the_sphere_is_3_S(base_equilibrium, sphere):
    eq = base_equilibrium
    S = eq.jacobian.determinant / 3 + eq.q_V * (eq.f_v - eq.f_u)
    assert ode_stability(eq, sphere).determinant == pytest.approx(3 * S)


def test_ode_stability_refuses_broken_sign_conditions(synthetic_equilibrium, sphere):
    eq = synthetic_equilibrium(f_u=0.5, f_v=0.0, q_u=-1.0, q_v=-2.0, q_V=0.5)
    with pytest.raises(SignConditionViolation):
        ode_stability(eq, sphere)


def test_first_two_eigenvalues_grow_at_reference(base_equilibrium, base_params):
    for mu in (2.0, 6.0):
        roots = quadratic_dispersion_roots(mu, base_equilibrium, base_params)
        assert roots.positive_root is not None
        assert roots.constant < 0
        assert reduced_dispersion(
            mu, roots.positive_root, base_equilibrium, base_params
        ) == pytest.approx(0.0, abs=1e-9 * abs(roots.constant))
    stable = quadratic_dispersion_roots(12.0, base_equilibrium, base_params)
    assert stable.positive_root is None
    assert stable.constant > 0


def test_growth_rate_of_first_eigenvalue(base_equilibrium, base_params):
    roots = quadratic_dispersion_roots(2.0, base_equilibrium, base_params)
    assert 5.5 < roots.positive_root < 7.0
    assert all(r.imag == 0 for r in roots.roots)


def test_complex_roots_come_in_conjugate_pairs(synthetic_equilibrium, base_params):
    eq = synthetic_equilibrium(f_u=0.0, f_v=1.0, q_u=-3.0, q_v=-0.5, q_V=0.5)
    roots = quadratic_dispersion_roots(2.0, eq, base_params)
    low, high = roots.roots
    assert low == high.conjugate()
    assert low.imag != 0
    assert roots.positive_root is None


def test_eigenvalue_must_be_positive(base_equilibrium, base_params):
    with pytest.raises(DomainError):
        quadratic_dispersion_roots(0.0, base_equilibrium, base_params)


def test_classification_is_exact_over_the_spectrum(
    base_equilibrium, base_params, sphere
):
    classification = classify_case_reduced(base_equilibrium, base_params, sphere)
    assert classification.case is Case.CASE2
    assert classification.admissible == (2.0, 6.0)
    for mu in sphere.eigenvalues:
        grows = (
            quadratic_dispersion_roots(
                mu, base_equilibrium, base_params
            ).positive_root
            is not None
        )
        assert grows == (mu in classification.admissible)


def random_jacobians(seed: int, count: int) -> Iterator[Jacobian]:
    """Jacobians that satisfy the strict sign conditions."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        q_u = rng.uniform(-5.0, 5.0)
        yield Jacobian(
            f_u=rng.uniform(-3.0, 3.0),
            f_v=rng.uniform(0.1, 3.0),
            q_u=q_u,
            q_v=min(q_u, 0.0) - rng.uniform(0.1, 5.0),
            q_V=rng.uniform(0.1, 2.0),
        )


def test_classification_matches_a_scan_of_the_constant_term(sphere):
    rng = np.random.default_rng(5)
    for jac in random_jacobians(3, 1000):
        eq = Equilibrium(u_star=0.2, v_star=0.2, V_star=1.0, jacobian=jac)
        p = KineticParams(gamma=rng.uniform(1.0, 500.0), d=rng.uniform(0.0, 3.0))
        growing = [
            mu
            for mu in sphere.eigenvalues
            if p.d * mu**2
            + p.gamma * mu * (jac.f_v - p.d * jac.f_u - jac.q_v)
            + p.gamma**2 * (jac.f_u * jac.q_v - jac.f_v * jac.q_u)
            < 0
        ]
        classification = classify_case_reduced(eq, p, sphere)
        assert list(classification.admissible) == growing
        assert (classification.case is Case.NONE) == (not growing)


def test_positive_determinant_implies_negative_trace(sphere):
    for jac in random_jacobians(13, 1000):
        eq = Equilibrium(u_star=0.2, v_star=0.2, V_star=1.0, jacobian=jac)
        result = ode_stability(eq, sphere)
        assert result.determinant_implies_trace
        if result.determinant > 0:
            assert result.trace < 0
            assert result.f_u_lt_f_v


@pytest.mark.parametrize(
    "gamma, verdict", [(400.0, Verdict.UNSTABLE), (40.0, Verdict.STABLE)]
)
def test_reduced_stability_depends_on_cell_size(
    gamma, verdict, base_equilibrium, base_params, sphere
):
    result, _ = reduced_stability(
        base_equilibrium, base_params.replace(gamma=gamma), sphere
    )
    assert result is verdict


def test_reduced_stability_of_an_unstable_state(
    synthetic_equilibrium, base_params, sphere
):
    eq = synthetic_equilibrium(f_u=2.0, f_v=1.0, q_u=-1.0, q_v=-2.0, q_V=0.1)
    result, _ = reduced_stability(eq, base_params, sphere)
    assert result is Verdict.NOT_APPLICABLE


def test_growth_rate_plus_eigenvalue_is_constant(base_equilibrium, base_params):
    curve = growth_rate_curve(base_equilibrium, base_params, [2.0, 6.0, 12.0])
    assert curve[0].omega_plus > curve[1].omega_plus
    assert curve[0].s == pytest.approx(curve[1].s, rel=1e-9)
    assert curve[2].omega_plus is None
    assert curve[2].s is None


def test_growth_rate_curve_omits_s_for_unequal_diffusivities(
    base_equilibrium, base_params
):
    curve = growth_rate_curve(
        base_equilibrium, base_params.replace(d=2.0), [2.0]
    )
    assert curve[0].s is None


def test_most_unstable_mode_is_the_first(base_equilibrium, base_params, sphere):
    point = most_unstable_mode(base_equilibrium, base_params, sphere)
    assert point.mu == 2.0


def test_small_cell_has_no_unstable_mode(base_equilibrium, base_params, sphere):
    p = base_params.replace(gamma=40.0)
    assert most_unstable_mode(base_equilibrium, p, sphere) is None


def test_full_growth_rate_approaches_the_non_local_limit(
    base_equilibrium, base_params
):
    points = full_vs_reduced_consistency(
        base_equilibrium, base_params, 1, [100.0, 1e3, 1e4]
    )
    gaps = [point.gap for point in points]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


def test_consistency_needs_a_growing_mode(base_equilibrium, base_params):
    with pytest.raises(DomainError):
        full_vs_reduced_consistency(base_equilibrium, base_params, 3, [100.0])
