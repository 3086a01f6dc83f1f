"""
Tests for the theorem constants, their verdicts and the assumption audits.
"""

from dataclasses import replace

import numpy as np
import pytest

from impulsive_see.dynamics import ImpulseEvent, ProblemSpec
from impulsive_see.errors import AuditError, ImpulsiveSEEError
from impulsive_see.qwiener import NoiseSpec
from impulsive_see.spectral_core import SemigroupSpec
from impulsive_see.wellposedness import (
    SUFFICIENT_ONLY,
    LipschitzBundle,
    audit_growth,
    audit_lipschitz,
    audit_problem,
    check_all,
    composition_constants,
    l20_norm,
    max_certified_horizon,
    theorem1_check,
    theorem2_check,
)

EXAMPLE_BUNDLE = LipschitzBundle(L_g=0.4, L_h=0.4, Lt_g=0.04, Lt_h=0.04)
TOY_BUNDLE = LipschitzBundle(L_g=0.01, L_h=0.01, Lt_g=0.01, Lt_h=0.01)


@pytest.fixture
def scalar_no_jump_spec():
    """mu = -1, B = 1, T = 1/2, no impulses"""
    return ProblemSpec(
        sg=SemigroupSpec(np.array([-1.0])),
        B=np.ones((1, 1)),
        impulses=(),
        g=lambda t, y: 0.1 * y,
        h=lambda t, y: np.zeros((1, 1)),
        noise=NoiseSpec(np.array([1.0])),
        horizon=0.5,
        y0=np.zeros(1),
    )


class TestLipschitzBundle:
    def test_negative_constant_rejected(self):
        with pytest.raises(ImpulsiveSEEError):
            LipschitzBundle(L_g=-0.1)


class TestCompositionConstants:
    """Tests for the impulse composition constants C_i and N"""

    def test_single_identity_jump(self, heat_example_spec):
        """D = I gives C_1 = 2 and N = 4"""
        comp = composition_constants(heat_example_spec)
        assert np.allclose(comp.C, [2.0])
        assert comp.N == pytest.approx(4.0, rel=1e-12)
        assert np.allclose(comp.jump_norms, [1.0])

    def test_two_jumps(self, scalar_no_jump_spec):
        """C_1 carries the second jump and the semigroup between them"""
        spec = replace(
            scalar_no_jump_spec,
            horizon=1.0,
            impulses=(
                ImpulseEvent(t=0.2, D=[[0.5]], E=[[1.0]], v=[0.0]),
                ImpulseEvent(t=0.6, D=[[1.0]], E=[[1.0]], v=[0.0]),
            ),
        )
        comp = composition_constants(spec)
        c1 = 1.5 * 2.0 * np.exp(-0.4)
        assert comp.C == pytest.approx([c1, 2.0], rel=1e-12)
        assert comp.N == pytest.approx(c1**2 + 4.0, rel=1e-12)
        assert comp.C_bound == pytest.approx([3.0, 2.0], rel=1e-12)
        assert comp.N_bound == pytest.approx(13.0, rel=1e-12)


class TestTheorem1:
    """Tests for theorem1_check"""

    def test_application_example(self, heat_example_spec):
        """M = 1, T = 1, L_g = L_h = 2/5: script N = 1.8"""
        report = theorem1_check(heat_example_spec, EXAMPLE_BUNDLE)
        assert report.M == 1.0
        assert report.script_N == pytest.approx(1.8, rel=1e-12)
        assert report.script_S == pytest.approx(0.8, rel=1e-12)
        assert report.verdict_thm1 is False
        assert report.binding_constraint == "𝒩 < 1/9"
        assert "M² < 1" in report.violations
        assert SUFFICIENT_ONLY in report.notes

    def test_no_impulse_scenario(self, scalar_no_jump_spec):
        """Hand substitution with k = 0, N = 0"""
        lb = LipschitzBundle(L_g=0.1, L_h=0.2)
        report = theorem1_check(scalar_no_jump_spec, lb)
        growth = 0.25 * 0.1 + 0.5 * 0.2
        assert report.script_N == pytest.approx(1.0 + growth, rel=1e-12)
        assert report.script_S == pytest.approx(growth, rel=1e-12)
        assert report.K0 == pytest.approx(1.0, rel=1e-12)
        assert report.K1 == pytest.approx(0.0, abs=1e-15)
        assert report.K2 == pytest.approx(0.5, rel=1e-12)
        assert report.k_thm1 == pytest.approx(3.0, rel=1e-12)

    def test_diagnostic_small_M(self, contraction_spec):
        """An M below 1 is accepted as a diagnostic override and can pass"""
        report = theorem1_check(contraction_spec, TOY_BUNDLE, M=0.1)
        growth = 0.0625 * 0.01 + 0.25 * 0.01
        assert report.script_N == pytest.approx(0.01 + 0.01 * growth, rel=1e-12)
        assert report.K0 == pytest.approx(1e-4 + (1e-4 + 1e-2) * growth, rel=1e-12)
        assert report.K1 == pytest.approx(0.01 * 0.25 + (1e-4 + 1e-2) * growth, rel=1e-12)
        assert report.K2 == pytest.approx((1e-4 + 1e-2) * 0.25, rel=1e-12)
        assert report.k_thm1 == pytest.approx(3e-4 + 3e-4 * growth, rel=1e-12)
        assert report.verdict_thm1 is True
        assert any("Diagnostic mode" in note for note in report.notes)

    def test_r0_formula_present(self, heat_example_spec):
        report = theorem1_check(heat_example_spec, EXAMPLE_BUNDLE)
        assert report.r0_formula.startswith("r0 >= max{")

    def test_bound_variant_uses_M(self, heat_example_spec):
        report = theorem1_check(heat_example_spec, EXAMPLE_BUNDLE)
        assert "verdict_thm1" in report.bound_variant
        assert report.bound_variant["script_N"] == pytest.approx(1.8)


class TestTheorem2:
    """Tests for theorem2_check"""

    def test_application_example(self, heat_example_spec):
        """k1 = 0.16, k2 = 1.6, not certified"""
        report = theorem2_check(heat_example_spec, EXAMPLE_BUNDLE)
        assert report.k1 == pytest.approx(0.16, rel=1e-12)
        assert report.k2 == pytest.approx(1.6, rel=1e-12)
        assert report.k_thm2 == pytest.approx(1.6, rel=1e-12)
        assert report.verdict_thm2 is False
        assert report.binding_constraint == "k = max{k₁, k₂} < 1"

    def test_contraction_scenario(self, contraction_spec):
        """M = 1, T = 1/4, Lt = 1/100 each, N = 1: k = 0.085"""
        report = theorem2_check(contraction_spec, TOY_BUNDLE)
        assert report.N == pytest.approx(1.0)
        assert report.k1 == pytest.approx(0.0025, rel=1e-12)
        assert report.k2 == pytest.approx(0.085, rel=1e-12)
        assert report.verdict_thm2 is True
        assert report.binding_constraint is None

    def test_diagnostic_small_M(self, contraction_spec):
        report = theorem2_check(contraction_spec, TOY_BUNDLE, M=0.1)
        assert report.k1 == pytest.approx(2.5e-5, rel=1e-12)
        assert report.k2 == pytest.approx(4e-4 * 1.0625 * 0.02, rel=1e-12)

    def test_monotone_in_lipschitz_constants(self, contraction_spec):
        """Larger Lipschitz constants never decrease k"""
        previous = 0.0
        for scale in (0.5, 1.0, 2.0, 4.0):
            lb = LipschitzBundle(Lt_g=0.01 * scale, Lt_h=0.01 * scale)
            k = theorem2_check(contraction_spec, lb).k_thm2
            assert k >= previous
            previous = k

    def test_monotone_in_horizon(self, contraction_spec):
        """k never decreases with T; once the verdict fails it stays failed"""
        ks, verdicts = [], []
        for T in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
            report = check_all(replace(contraction_spec, horizon=T), TOY_BUNDLE)
            ks.append((report.k_thm1, report.k_thm2))
            verdicts.append(report.verdict_thm2)
        assert all(b[0] >= a[0] and b[1] >= a[1] for a, b in zip(ks, ks[1:], strict=False))
        assert verdicts == sorted(verdicts, reverse=True)
        assert verdicts[0] is True and verdicts[-1] is False

    def test_monotone_in_jump_norm(self, contraction_spec):
        """k never decreases with ||D||; once the verdict fails it stays failed"""
        (event,) = contraction_spec.impulses
        ks, verdicts = [], []
        for s in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
            jump = ImpulseEvent(t=event.t, D=s * np.eye(4), E=event.E, v=event.v)
            report = check_all(replace(contraction_spec, impulses=(jump,)), TOY_BUNDLE)
            assert report.N == pytest.approx((1.0 + s) ** 2)
            ks.append((report.k_thm1, report.k_thm2))
            verdicts.append(report.verdict_thm2)
        assert all(b[0] >= a[0] and b[1] >= a[1] for a, b in zip(ks, ks[1:], strict=False))
        assert verdicts == sorted(verdicts, reverse=True)
        assert verdicts[0] is True and verdicts[-1] is False


class TestCheckAll:
    """Tests for check_all and max_certified_horizon"""

    def test_combined_report(self, heat_example_spec):
        report = check_all(heat_example_spec, EXAMPLE_BUNDLE)
        assert report.script_N == pytest.approx(1.8, rel=1e-12)
        assert report.k1 == pytest.approx(0.16, rel=1e-12)
        assert report.k2 == pytest.approx(1.6, rel=1e-12)
        assert report.verdict_thm1 is False and report.verdict_thm2 is False
        assert report.binding_constraint == "𝒩 < 1/9"
        assert report.violations[-1] == "k = max{k₁, k₂} < 1"
        assert set(report.provenance) == {"verdict_thm1", "verdict_thm2"}

    def test_report_serializes(self, heat_example_spec):
        data = check_all(heat_example_spec, EXAMPLE_BUNDLE).model_dump(mode="json")
        assert data["k2"] == pytest.approx(1.6)

    def test_max_horizon_already_certified(self, contraction_spec):
        assert max_certified_horizon(contraction_spec, TOY_BUNDLE) == 0.25

    def test_max_horizon_by_bisection(self, contraction_spec):
        """k2 = 0.08 (1 + T^2) < 1 up to T = sqrt(11.5)"""
        horizon = max_certified_horizon(contraction_spec, TOY_BUNDLE, upper=5.0)
        assert horizon == pytest.approx(np.sqrt(11.5), rel=1e-9)

    def test_max_horizon_none(self, heat_example_spec):
        assert max_certified_horizon(heat_example_spec, EXAMPLE_BUNDLE) is None


class TestAudits:
    """Tests for l20_norm and the sampling audits"""

    def test_l20_norm(self):
        noise = NoiseSpec(np.array([1.0, 0.25]))
        assert l20_norm(np.array([[1.0, 0.0], [0.0, 2.0]]), noise) == pytest.approx(np.sqrt(2.0))

    def test_true_lipschitz_constant_passes(self):
        audit = audit_lipschitz(lambda t, y: 0.1 * y, 0.01, 500, 4.0, seed=0, dim=3)
        assert audit.passed
        assert audit.max_observed_ratio == pytest.approx(0.01, rel=1e-9)

    def test_understated_constant_fails(self):
        audit = audit_lipschitz(lambda t, y: 0.1 * y, 0.005, 100, 4.0, seed=0, dim=3)
        assert not audit.passed
        assert len(audit.violations) == 100

    def test_growth_audit(self):
        assert audit_growth(lambda t, y: np.sin(y), 1.0, 300, 4.0, seed=1, dim=2).passed
        assert not audit_growth(lambda t, y: 2.0 * y + 1.0, 1.0, 300, 4.0, seed=1, dim=2).passed

    def test_failing_callback(self):
        def broken(t, y):
            raise RuntimeError("boom")

        with pytest.raises(AuditError, match="boom"):
            audit_lipschitz(broken, 1.0, 5, 1.0, seed=0, dim=2)

    def test_application_example_claims_hold(self, heat_example_spec):
        """The declared growth and Lipschitz constants of the example survive sampling"""
        audits = audit_problem(heat_example_spec, EXAMPLE_BUNDLE, 300, 4.0, seed=3)
        assert set(audits) == {"growth_g", "growth_h", "lipschitz_g", "lipschitz_h"}
        assert all(a.passed for a in audits.values())

    def test_audits_are_deterministic(self):
        a = audit_growth(lambda t, y: np.tanh(y), 1.0, 50, 2.0, seed=9, dim=2)
        b = audit_growth(lambda t, y: np.tanh(y), 1.0, 50, 2.0, seed=9, dim=2)
        assert a.max_observed_ratio == b.max_observed_ratio
