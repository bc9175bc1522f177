"""Tests for the collapse-to-the-mean detectors."""

import pytest

from lawcollapse.config import get_settings
from lawcollapse.exceptions import DomainError, PreconditionError
from lawcollapse.models import DiscreteLaw, UniformSample
from lawcollapse.services.capacities import (
    DensityFamilyCapacity,
    DistortionCapacity,
    JPCapacity,
)
from lawcollapse.services.collapse import (
    ANCHOR_LAWS,
    choquet_symmetric_linearity,
    expectation_invariance_probe,
    meta_gap_certificate,
    recession_direction_test,
    translation_line_test,
)
from lawcollapse.services.functionals import (
    choquet_functional,
    crm_functional,
    es_functional,
    mean_functional,
    phi_functional,
    rho_functional,
)
from lawcollapse.services.rearrange import hl_lower, hl_upper
from lawcollapse.services.riskmeasures import ConsistentRiskMeasure
from tests.factories import make_densities, make_law, make_sample

U = DiscreteLaw.from_atoms([(0.0, 0.5), (4.0, 0.5)])
T_GRID = [-5.0, -2.0, -1.0, 1.0, 2.0, 5.0]


class TestTranslationLineTest:
    """Tests for phi(x0 + tZ) = phi(x0) + a t on a grid."""

    def test_phi_is_flat_along_z(self, key_z):
        verdict = translation_line_test(phi_functional(), 0.0, key_z, 0.0, T_GRID)
        assert verdict.collapsed
        assert verdict.gap == pytest.approx(0.0, abs=1e-12)
        assert verdict.witness == key_z

    def test_phi_is_linear_along_u(self):
        verdict = translation_line_test(phi_functional(), 0.0, U, 1.0, T_GRID)
        assert verdict.collapsed

    def test_wrong_slope_reports_worst_t(self):
        verdict = translation_line_test(phi_functional(), 0.0, U, 0.0, T_GRID)
        assert not verdict.collapsed
        assert verdict.gap == pytest.approx(5.0)
        assert "worst t=-5.0" in verdict.notes

    def test_rho_is_not_linear_along_z(self, key_z):
        verdict = translation_line_test(rho_functional(), 0.0, key_z, 0.5, T_GRID)
        assert not verdict.collapsed

    def test_needs_a_grid(self, key_z):
        with pytest.raises(DomainError):
            translation_line_test(mean_functional(), 0.0, key_z, 0.0, [])

    def test_needs_a_law_invariant_functional(self, key_z):
        phi = choquet_functional(JPCapacity(DensityFamilyCapacity([[1.5, 0.5]]), 0.8))
        with pytest.raises(PreconditionError):
            translation_line_test(phi, 0.0, key_z, 0.0, T_GRID)

    def test_mean_passes_on_random_lines(self, rng):
        for _ in range(100):
            x0, z = rng.uniform(-5.0, 5.0), make_law(rng)
            verdict = translation_line_test(mean_functional(), x0, z, z.mean, T_GRID)
            assert verdict.collapsed
            assert verdict.gap <= 1e-9

    def test_es_gap_on_z_at_minus_one(self, key_z):
        verdict = translation_line_test(es_functional(0.5), 0.0, key_z, 1.0, [-1.0, 1.0])
        assert not verdict.collapsed
        assert verdict.gap == pytest.approx(2.0)
        assert "worst t=-1.0" in verdict.notes

    @pytest.mark.parametrize(
        "phi",
        [es_functional(0.5), crm_functional(ConsistentRiskMeasure.worst_case())],
        ids=["es", "worst-case"],
    )
    def test_full_lines_fail_for_centered_z(self, rng, phi):
        """No nonconstant centered Z leaves ES_1/2 or the maximum linear on a full line."""
        checked = 0
        while checked < 100:
            sample = make_sample(rng, int(rng.integers(2, 7)))
            if sample.is_constant:
                continue
            z = sample.to_law().affine(1.0, -sample.mean)
            x0 = rng.uniform(-5.0, 5.0)
            a = phi(z.affine(1.0, x0)) - phi(DiscreteLaw.point(x0))
            verdict = translation_line_test(phi, x0, z, a, T_GRID)
            assert not verdict.collapsed
            assert verdict.gap > 1e-3
            checked += 1


class TestMetaGapCertificate:
    """Tests for the rearrangement-gap certificate."""

    def test_mean_forces_constant_y(self, key_z):
        verdict = meta_gap_certificate(mean_functional(), 0.0, key_z, U, k_max=20)
        assert verdict.collapsed
        assert verdict.gap == 0.0
        assert verdict.violation_k == 1
        assert verdict.witness == U

    def test_constant_y_is_trivially_collapsed(self, key_z):
        verdict = meta_gap_certificate(mean_functional(), 0.0, key_z, DiscreteLaw.point(3.0), 5)
        assert verdict.collapsed
        assert verdict.gap == 0.0
        assert verdict.violation_k is None

    def test_positive_offset_leaves_slack(self, key_z):
        verdict = meta_gap_certificate(
            mean_functional(), 0.0, key_z, U, k_max=4, conjugate_offset=4.0
        )
        assert not verdict.collapsed
        assert verdict.gap == pytest.approx(2.0)
        assert verdict.violation_k == 3
        assert "fails from k=3" in verdict.notes

    def test_nonconstant_z_required(self):
        with pytest.raises(PreconditionError, match="nonconstant Z"):
            meta_gap_certificate(mean_functional(), 0.0, DiscreteLaw.point(1.0), U, 5)

    def test_k_max_must_be_positive(self, key_z):
        with pytest.raises(DomainError):
            meta_gap_certificate(mean_functional(), 0.0, key_z, U, 0)

    def test_nonlinear_direction_rejected(self, key_z):
        with pytest.raises(PreconditionError, match="not linear"):
            meta_gap_certificate(rho_functional(), 0.0, key_z, U, 5)

    def test_slack_never_below_the_rearrangement_gap(self, rng):
        """A nonconstant y is either flagged or the slack at k_max covers its spread."""
        tol = get_settings().collapse_tolerance
        checked = 0
        while checked < 200:
            z, y = make_law(rng), make_law(rng)
            if z.is_constant or y.is_constant:
                continue
            x0, offset = rng.uniform(-3.0, 3.0), rng.uniform(0.0, 6.0)
            k_max = int(rng.integers(1, 60))
            verdict = meta_gap_certificate(mean_functional(), x0, z, y, k_max, offset)
            spread = hl_upper(z, y) - hl_lower(z, y)
            assert spread > tol
            if verdict.violation_k is None:
                assert spread <= verdict.gap + tol
                assert verdict.witness is None
            else:
                assert verdict.witness == y
            if verdict.collapsed:
                assert verdict.violation_k is not None
            checked += 1


class TestExpectationInvarianceProbe:
    """Tests for the equal-mean probe."""

    def test_mean_passes(self):
        verdict = expectation_invariance_probe(mean_functional(), trials=40, seed=7)
        assert verdict.collapsed
        assert verdict.gap == pytest.approx(0.0, abs=1e-12)
        assert f"{len(ANCHOR_LAWS)} anchor pairs and 80 random pairs (seed 7)" == verdict.notes

    def test_es_fails_on_anchors(self):
        verdict = expectation_invariance_probe(es_functional(0.5), trials=0, seed=1)
        assert not verdict.collapsed
        assert verdict.gap == pytest.approx(5.0)

    def test_phi_fails(self):
        verdict = expectation_invariance_probe(phi_functional(), trials=10)
        assert not verdict.collapsed
        assert verdict.witness is not None

    def test_seed_makes_it_deterministic(self):
        first = expectation_invariance_probe(rho_functional(), trials=25, seed=3)
        second = expectation_invariance_probe(rho_functional(), trials=25, seed=3)
        assert first == second

    def test_default_seed_comes_from_settings(self, monkeypatch):
        monkeypatch.setenv("LAWCOLLAPSE_SEED", "11")
        get_settings.cache_clear()
        verdict = expectation_invariance_probe(mean_functional(), trials=2)
        assert verdict.notes.endswith("(seed 11)")

    def test_negative_trials_rejected(self):
        with pytest.raises(DomainError):
            expectation_invariance_probe(mean_functional(), trials=-1)


class TestChoquetSymmetricLinearity:
    """Tests for the JP capacity symmetric-linearity search."""

    def test_example_has_no_witness(self):
        mu = JPCapacity(DensityFamilyCapacity([[1.2, 0.8], [0.8, 1.2]]), 0.8)
        verdict = choquet_symmetric_linearity(mu)
        assert not verdict.collapsed
        assert verdict.gap == pytest.approx(0.12)
        assert verdict.witness is None

    def test_uniform_nu_has_a_witness(self):
        mu = JPCapacity(DensityFamilyCapacity.uniform(3), 0.8)
        verdict = choquet_symmetric_linearity(mu)
        assert verdict.collapsed
        assert verdict.witness == UniformSample.of([1.0, 0.0, 0.0])
        assert "uniform probability" in verdict.notes

    def test_permutation_closed_family(self):
        nu = DensityFamilyCapacity([[1.5, 1.0, 0.5]]).permutation_closure()
        verdict = choquet_symmetric_linearity(JPCapacity(nu, 0.9))
        assert not verdict.collapsed
        assert verdict.gap > 0

    def test_custom_candidates_replace_indicators(self):
        mu = JPCapacity(DensityFamilyCapacity([[1.2, 0.8], [0.8, 1.2]]), 0.8)
        candidates = [UniformSample.of([2.0, 0.0])]
        verdict = choquet_symmetric_linearity(mu, candidates)
        assert verdict.gap == pytest.approx(0.24)
        assert verdict.notes == "no witness among 1 candidates"

    def test_constant_candidates_rejected(self):
        mu = JPCapacity(DensityFamilyCapacity.uniform(2), 0.8)
        with pytest.raises(PreconditionError, match="nonconstant Z"):
            choquet_symmetric_linearity(mu, [UniformSample.of([1.0, 1.0])])

    def test_needs_a_jp_capacity(self):
        with pytest.raises(DomainError):
            choquet_symmetric_linearity(DistortionCapacity.identity(2))

    def test_needs_law_invariance(self):
        mu = JPCapacity(DensityFamilyCapacity([[1.5, 0.5]]), 0.8)
        with pytest.raises(PreconditionError):
            choquet_symmetric_linearity(mu)

    def test_witness_exactly_for_the_uniform_probability(self, rng):
        """Twenty law-invariant JP capacities on n = 2..6: uniform nu or a random closure."""
        for n in range(2, 7):
            for alpha in (0.2, 0.8):
                uniform = choquet_symmetric_linearity(
                    JPCapacity(DensityFamilyCapacity.uniform(n), alpha)
                )
                assert uniform.collapsed
                assert uniform.witness is not None
                assert "is the uniform probability" in uniform.notes

                nu = make_densities(rng, n, count=1).permutation_closure()
                closed = choquet_symmetric_linearity(JPCapacity(nu, alpha))
                assert not closed.collapsed
                assert closed.witness is None
                assert closed.gap > 1e-7


class TestRecessionDirection:
    """Tests for phi(x0 + tU) <= phi(x0) along a ray."""

    def test_downward_ray_recedes(self):
        verdict = recession_direction_test(phi_functional(), 0.0, U.negate(), [0.0, 1.0, 2.0, 5.0])
        assert verdict.collapsed
        assert verdict.gap == 0.0

    def test_upward_ray_does_not_recede(self):
        verdict = recession_direction_test(phi_functional(), 0.0, U, [0.0, 1.0, 2.0, 5.0])
        assert not verdict.collapsed
        assert verdict.gap == pytest.approx(5.0)

    def test_negative_t_rejected(self):
        with pytest.raises(DomainError):
            recession_direction_test(phi_functional(), 0.0, U, [-1.0])
