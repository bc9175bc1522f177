"""Tests for laws, quantile functions, step-function integrals and stochastic orders."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lawcollapse.exceptions import DomainError, InputFormatError
from lawcollapse.models import DiscreteLaw, QuantileFn, UniformSample
from lawcollapse.services.laws import (
    convex_order_dominates,
    dilatation_pairs,
    dilate,
    ingest_csv,
    merged_breakpoints,
    partial_integral,
    product_integral,
    quantile,
    quantile_function,
    ssd_dominated,
    tail_integral,
    upper_quantile,
)
from lawcollapse.services.riskmeasures import es
from tests.factories import laws, make_law, samples


class TestDiscreteLaw:
    """Tests for law construction and normalisation."""

    def test_duplicate_values_are_merged(self):
        law = DiscreteLaw.from_atoms([(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])
        assert law.values == (0.0, 1.0)
        assert law.probs == pytest.approx((0.5, 0.5))

    def test_negative_zero_merges_with_zero(self):
        law = DiscreteLaw.from_atoms([(-0.0, 0.5), (0.0, 0.5)])
        assert law.is_constant

    def test_probabilities_are_renormalised(self):
        law = DiscreteLaw.from_atoms([(0.0, 0.5 + 1e-8), (1.0, 0.5)])
        assert math.fsum(law.probs) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize(
        "atoms",
        [
            [],
            [(0.0, 0.6), (1.0, 0.6)],
            [(0.0, -0.5), (1.0, 1.5)],
            [(math.inf, 1.0)],
            [(math.nan, 1.0)],
            [(0.0, 1.0), (1.0, 0.0)],
        ],
    )
    def test_invalid_atoms_rejected(self, atoms):
        with pytest.raises(DomainError):
            DiscreteLaw.from_atoms(atoms)

    def test_affine_and_negate(self, key_z):
        shifted = key_z.affine(2.0, 1.0)
        assert shifted.values == (-1.0, 5.0)
        assert key_z.negate().values == (-2.0, 1.0)
        assert key_z.negate().mean == pytest.approx(0.0, abs=1e-15)

    def test_on_grid_and_granularity(self, key_z):
        assert key_z.granularity() == 3
        assert key_z.on_grid(3).tolist() == [-1.0, -1.0, 2.0]
        assert key_z.on_grid(6).tolist() == [-1.0, -1.0, -1.0, -1.0, 2.0, 2.0]
        with pytest.raises(DomainError):
            key_z.on_grid(2)

    def test_irrational_weights_have_no_granularity(self):
        law = DiscreteLaw.from_atoms([(0.0, 1 / math.pi), (1.0, 1 - 1 / math.pi)])
        assert law.granularity() is None

    def test_sample_to_law(self):
        law = UniformSample.of([2.0, -1.0, -1.0]).to_law()
        assert law.values == (-1.0, 2.0)
        assert law.probs == pytest.approx((2 / 3, 1 / 3))


class TestQuantiles:
    """Tests for left- and right-continuous quantiles."""

    def test_left_continuous_at_atom_boundary(self, key_z):
        q = quantile_function(key_z)
        boundary = q.breakpoints[1]
        assert quantile(key_z, boundary) == -1.0
        assert upper_quantile(key_z, boundary) == 2.0

    def test_interior_levels(self, key_z):
        assert quantile(key_z, 0.1) == -1.0
        assert quantile(key_z, 0.9) == 2.0
        assert upper_quantile(key_z, 0.9) == 2.0

    @pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 1.5])
    def test_levels_outside_open_interval_rejected(self, key_z, s):
        with pytest.raises(DomainError):
            quantile(key_z, s)
        with pytest.raises(DomainError):
            upper_quantile(key_z, s)

    def test_quantile_function_round_trip(self, key_z):
        law = quantile_function(key_z).to_law()
        assert law.values == key_z.values
        assert law.probs == pytest.approx(key_z.probs)

    def test_round_trip_and_monotonicity_on_random_laws(self, rng):
        """Law to quantile function and back is the identity on 1000 random laws."""
        levels = np.linspace(0.0005, 0.9995, 200).tolist()
        for _ in range(1000):
            law = make_law(rng)
            q = quantile_function(law)
            back = q.to_law()
            assert back.values == law.values
            assert back.probs == pytest.approx(law.probs, abs=1e-12)
            values = [q(s) for s in levels]
            assert values == sorted(values)
            assert values[0] == law.min_support
            assert values[-1] == law.max_support

    def test_malformed_quantile_function_rejected(self):
        with pytest.raises(DomainError):
            QuantileFn((0.0, 0.5, 1.0), (1.0, 0.0))
        with pytest.raises(DomainError):
            QuantileFn((0.1, 1.0), (1.0,))


class TestIntegrals:
    """Tests for exact step-function integrals."""

    def test_tail_integral_of_z(self, key_z):
        q = quantile_function(key_z)
        assert tail_integral(q, 0.5) == pytest.approx(0.5)
        assert tail_integral(q, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_partial_integral_inside_one_step(self, key_z):
        q = quantile_function(key_z)
        assert partial_integral(q, 0.1, 0.3) == pytest.approx(-0.2)
        assert partial_integral(q, 0.4, 0.4) == 0.0

    @pytest.mark.parametrize("a, b", [(-0.1, 0.5), (0.6, 0.5), (0.2, 1.1)])
    def test_bad_bounds_rejected(self, key_z, a, b):
        with pytest.raises(DomainError):
            partial_integral(quantile_function(key_z), a, b)

    @given(laws())
    def test_full_integral_is_the_mean(self, law):
        assert partial_integral(quantile_function(law), 0.0, 1.0) == pytest.approx(
            law.mean, abs=1e-12
        )

    @given(laws(), laws())
    def test_product_integral_dominates_reflected(self, x, y):
        qx, qy = quantile_function(x), quantile_function(y)
        upper = product_integral(qx, qy)
        lower = product_integral(qx, qy, reflect_first=True)
        assert lower <= x.mean * y.mean + 1e-12
        assert x.mean * y.mean <= upper + 1e-12

    def test_product_integral_second_moment(self, key_z):
        q = quantile_function(key_z)
        assert product_integral(q, q) == pytest.approx(2.0)

    def test_merged_breakpoints_cover_both_grids(self, key_z):
        half = DiscreteLaw.from_atoms([(0.0, 0.5), (1.0, 0.5)])
        grid = merged_breakpoints(quantile_function(key_z), quantile_function(half))
        assert grid.tolist() == pytest.approx([0.0, 0.5, 2 / 3, 1.0])

    def test_merged_breakpoints_reflection(self, key_z):
        grid = merged_breakpoints(quantile_function(key_z), reflect=(True,))
        assert grid.tolist() == pytest.approx([0.0, 1 / 3, 1.0])


class TestStochasticOrders:
    """Tests for convex order and increasing convex order."""

    def test_law_dominates_its_mean(self, key_z):
        assert convex_order_dominates(key_z, DiscreteLaw.point(0.0))
        assert not convex_order_dominates(DiscreteLaw.point(0.0), key_z)

    def test_unequal_means_are_incomparable_in_convex_order(self, key_z):
        assert not convex_order_dominates(key_z.affine(1.0, 1.0), DiscreteLaw.point(0.0))

    def test_increasing_convex_order_allows_higher_mean(self, key_z):
        assert ssd_dominated(key_z.affine(1.0, 1.0), DiscreteLaw.point(0.0))
        assert not ssd_dominated(DiscreteLaw.point(-1.0), key_z)

    @given(laws(), laws())
    def test_convex_order_matches_es_profile(self, x, y):
        if convex_order_dominates(x, y):
            for p in (0.0, 0.25, 0.5, 0.75, 0.9, 1.0):
                assert es(x, p) >= es(y, p) - 1e-9


class TestDilatation:
    """Tests for conditional expectations on partitions of the index set."""

    def test_block_averages(self):
        x = UniformSample.of([1.0, 2.0, 3.0, 4.0])
        assert dilate(x, [[1, 2], [3, 4]]).values == (1.5, 1.5, 3.5, 3.5)
        assert dilate(x, [[1, 4], [2], [3]]).values == (2.5, 2.0, 3.0, 2.5)

    @pytest.mark.parametrize(
        "partition",
        [[[1, 2], [2, 3]], [[1, 2]], [[1, 2, 3], []], [[0, 1, 2]], [[1, 2, 4]]],
    )
    def test_invalid_partitions_rejected(self, partition):
        with pytest.raises(DomainError):
            dilate(UniformSample.of([1.0, 2.0, 3.0]), partition)

    @given(samples(min_n=2), st.data())
    def test_dilatation_is_dominated_in_convex_order(self, x, data):
        labels = data.draw(st.lists(st.integers(0, 2), min_size=x.n, max_size=x.n))
        partition = [
            [i + 1 for i, label in enumerate(labels) if label == block]
            for block in sorted(set(labels))
        ]
        ((law, dilated),) = dilatation_pairs(x, [partition])
        assert dilated.mean == pytest.approx(law.mean, abs=1e-12)
        assert convex_order_dominates(law, dilated)


class TestIngestCsv:
    """Tests for reading one value per line."""

    def test_reads_values_and_skips_blank_lines(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("2\n\n-1\n -1 \n")
        law = ingest_csv(path)
        assert law.values == (-1.0, 2.0)
        assert law.probs == pytest.approx((2 / 3, 1 / 3))

    def test_bad_line_reports_line_number(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1\n2\nthree\n")
        with pytest.raises(InputFormatError, match=":3:"):
            ingest_csv(path)

    def test_non_finite_value_rejected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1\ninf\n")
        with pytest.raises(InputFormatError, match=":2:"):
            ingest_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("\n\n")
        with pytest.raises(InputFormatError):
            ingest_csv(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(InputFormatError):
            ingest_csv(tmp_path / "missing.csv")
