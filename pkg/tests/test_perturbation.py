"""Perturbation machinery: structural checks, hand-worked fixtures, bounds."""
import math

import numpy as np
import pytest

from ploading import linalg, perturbation as pt
from ploading.exceptions import (
    BlockMismatchError,
    DegenerateDataError,
    StructuralZeroError,
)


def make_pop(coupling=0.1):
    """2 predictors, block D={0}; variable 1 carries all the signal."""
    return pt.Population(
        sigma=np.array([[1.0, 0.0], [0.0, 2.0]]),
        cov=np.array([0.0, 0.8]),
        var_y=1.0,
        e=np.array([[0.0, coupling], [coupling, 0.0]]),
        e_cov=np.zeros(2),
        d_set=(0,),
    )


def sym3(a01, a02, a12, diag=(0.0, 0.0, 0.0)):
    return np.array(
        [
            [diag[0], a01, a02],
            [a01, diag[1], a12],
            [a02, a12, diag[2]],
        ]
    )


@pytest.fixture
def pop():
    return make_pop()


@pytest.fixture
def split_main(pop):
    # starred rows: noise (0.05, 0.1), sample perturbation (0.02, -0.03)
    return pt.PerturbationSplit(
        population=pop,
        h_y=sym3(0.1, 0.05, 0.0),
        e_tilde_y=sym3(-0.03, 0.02, 0.0),
    )


@pytest.fixture
def split_small():
    # same sampling noise, but population and sample perturbations
    # two orders smaller: the angle condition clears
    quiet = make_pop(coupling=0.001)
    return pt.PerturbationSplit(
        population=quiet,
        h_y=sym3(0.1, 0.05, 0.0),
        e_tilde_y=sym3(-0.0003, 0.0002, 0.0),
    )


class TestPopulationValidation:
    def test_snaps_tiny_cross_entries(self):
        sigma = np.array([[1.0, 3e-13], [3e-13, 2.0]])
        pop = pt.Population(
            sigma=sigma, cov=np.array([2e-13, 0.8]), var_y=1.0,
            e=np.zeros((2, 2)), e_cov=np.zeros(2), d_set=(0,),
        )
        assert pop.sigma[0, 1] == 0.0
        assert pop.cov[0] == 0.0

    def test_rejects_large_cross_entries(self):
        sigma = np.array([[1.0, 1e-6], [1e-6, 2.0]])
        with pytest.raises(StructuralZeroError, match="couples"):
            pt.Population(
                sigma=sigma, cov=np.array([0.0, 0.8]), var_y=1.0,
                e=np.zeros((2, 2)), e_cov=np.zeros(2), d_set=(0,),
            )

    def test_rejects_cov_on_block(self):
        with pytest.raises(StructuralZeroError, match="cov"):
            pt.Population(
                sigma=np.eye(2) + np.diag([0.0, 1.0]),
                cov=np.array([0.5, 0.8]), var_y=2.0,
                e=np.zeros((2, 2)), e_cov=np.zeros(2), d_set=(0,),
            )

    def test_rejects_e_on_sigma_support(self):
        with pytest.raises(StructuralZeroError, match="overlaps"):
            pt.Population(
                sigma=np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.5], [0.0, 0.5, 1.5]]),
                cov=np.array([0.0, 0.6, 0.2]), var_y=1.0,
                e=sym3(0.0, 0.0, 0.1), e_cov=np.zeros(3), d_set=(0,),
            )

    def test_rejects_e_diagonal(self):
        # a positive sigma diagonal shadows this as an overlap, so use a
        # zero-variance slot to reach the dedicated diagnostic
        with pytest.raises(StructuralZeroError, match="diagonal"):
            pt.Population(
                sigma=np.diag([1.0, 0.0]), cov=np.array([0.0, 0.0]), var_y=1.0,
                e=np.diag([0.0, 0.1]), e_cov=np.zeros(2), d_set=(0,),
            )
        # and the ordinary case still refuses, as an overlap
        with pytest.raises(StructuralZeroError, match="overlaps"):
            pt.Population(
                sigma=np.diag([1.0, 2.0]), cov=np.array([0.0, 0.8]), var_y=1.0,
                e=np.diag([0.1, 0.0]), e_cov=np.zeros(2), d_set=(0,),
            )

    def test_rejects_e_cov_on_cov_support(self):
        with pytest.raises(StructuralZeroError, match="e_cov"):
            pt.Population(
                sigma=np.diag([1.0, 2.0]), cov=np.array([0.0, 0.8]), var_y=1.0,
                e=np.zeros((2, 2)), e_cov=np.array([0.0, 0.1]), d_set=(0,),
            )

    def test_rejects_indefinite_clean_joint(self):
        with pytest.raises(DegenerateDataError, match="sigma_y"):
            pt.Population(
                sigma=np.diag([1.0, 2.0]), cov=np.array([0.0, 0.8]), var_y=0.3,
                e=np.zeros((2, 2)), e_cov=np.zeros(2), d_set=(0,),
            )

    def test_rejects_indefinite_perturbed_joint(self):
        with pytest.raises(DegenerateDataError, match="sigma_tilde_y"):
            make_pop(coupling=1.5)

    def test_d_set_validation(self):
        kw = dict(
            sigma=np.diag([1.0, 2.0]), cov=np.array([0.0, 0.8]),
            var_y=1.0, e=np.zeros((2, 2)), e_cov=np.zeros(2),
        )
        for bad in ((), (0, 1), (0, 0), (5,)):
            with pytest.raises(ValueError):
                pt.Population(d_set=bad, **kw)

    def test_arrays_read_only(self, pop):
        with pytest.raises(ValueError):
            pop.sigma[0, 0] = 9.0
        with pytest.raises(ValueError):
            pop.sigma_y[0, 0] = 9.0


class TestPopulationDerived:
    def test_joint_assembly(self, pop):
        want = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.8], [0.0, 0.8, 1.0]])
        assert np.array_equal(pop.sigma_y, want)
        assert np.array_equal(pop.e_y, sym3(0.1, 0.0, 0.0))
        assert np.array_equal(pop.sigma_tilde_y, pop.sigma_y + pop.e_y)

    def test_perturbed_addition_exact_on_disjoint_support(self, pop):
        # e lives only where sigma_y is zero, so addition never rounds
        hit = pop.e_y != 0.0
        assert np.array_equal(pop.sigma_tilde_y[hit], pop.e_y[hit])
        assert np.array_equal(pop.sigma_tilde_y[~hit], pop.sigma_y[~hit])

    def test_correlation_deviation_sparse(self, pop):
        quiet = pop.e_y == 0.0
        assert np.all(pop.e_rho_y[quiet] == 0.0)
        assert np.all(np.diag(pop.e_rho_y) == 0.0)
        # the coupled entry rescales by the untouched variances
        want = 0.1 / math.sqrt(1.0 * 2.0)
        assert pop.e_rho_y[0, 1] == pytest.approx(want, abs=1e-15)

    def test_reference_directions(self, pop):
        assert np.allclose(pop.cov_star, [1.0, -0.4], atol=1e-15)
        want_corr = 0.8 / math.sqrt(2.0)
        assert np.allclose(pop.corr_ref, [1.0, -want_corr], atol=1e-15)
        assert np.array_equal(pop.inv_d_cov, [[1.0]])
        assert np.array_equal(pop.inv_d_corr, [[1.0]])

    def test_population_beta_vanishes_on_block(self, pop):
        assert np.allclose(pop.beta, [0.0, 0.4], atol=1e-15)

    def test_starred_population_rows(self, pop):
        assert np.array_equal(pop.e_star, [[0.0, 0.1]])
        assert pop.e_dagger.shape == (1, 2)
        assert pop.e_dagger[0, 0] == 0.0
        assert pop.e_dagger[0, 1] == pytest.approx(0.1 / math.sqrt(2.0), abs=1e-15)

    def test_block_eigen_indices(self, pop):
        # variable 0 is decoupled with variance 1, the coupled pair has
        # eigenvalues (3 +/- sqrt(3.56)) / 2 around it
        assert pop.block_eigen_indices() == (1,)
        assert pop.block_eigen_indices("correlation") == (1,)
        with pytest.raises(ValueError, match="basis"):
            pop.block_eigen_indices("precision")

    def test_block_eigen_indices_two_variable_block(self):
        # block spectrum {1.3, 0.7} sits between the coupled pair's
        # eigenvalues {2.53, 0.47}
        pop = pt.Population(
            sigma=np.array([
                [1.0, 0.3, 0.0],
                [0.3, 1.0, 0.0],
                [0.0, 0.0, 2.0],
            ]),
            cov=np.array([0.0, 0.0, 0.9]),
            var_y=1.0,
            e=np.zeros((3, 3)),
            e_cov=np.zeros(3),
            d_set=(0, 1),
        )
        assert pop.block_eigen_indices() == (1, 2)
        vals = pop.eigen_y.values
        assert vals[1] == pytest.approx(1.3, abs=1e-12)
        assert vals[2] == pytest.approx(0.7, abs=1e-12)


class TestSplits:
    def test_views(self, split_main):
        assert np.array_equal(split_main.h, np.array([[0.0, 0.1], [0.1, 0.0]]))
        assert np.array_equal(split_main.h_cov, [0.05, 0.0])
        assert np.array_equal(split_main.e_tilde_cov, [0.02, 0.0])

    def test_starred_rows(self, split_main):
        assert np.array_equal(split_main.h_star, [[0.05, 0.1]])
        assert np.array_equal(split_main.e_tilde_star, [[0.02, -0.03]])
        assert np.allclose(split_main.perturbation_rows, [[0.02, 0.07]], atol=1e-15)
        assert np.array_equal(split_main.noise_rows, split_main.h_star)

    def test_perturbation_joint(self, split_main):
        want = split_main.population.e_y + split_main.e_tilde_y
        assert np.array_equal(split_main.perturbation_joint, want)

    def test_split_sample_round_trip(self, pop):
        h_y = sym3(0.1, 0.05, 0.0, diag=(0.01, -0.02, 0.03))
        e_tilde_y = sym3(-0.03, 0.02, 0.01)
        split = pt.split_sample(pop, pop.sigma_y + h_y, pop.sigma_tilde_y + e_tilde_y)
        assert np.allclose(split.h_y, h_y, atol=1e-15)
        assert np.allclose(split.e_tilde_y, e_tilde_y, atol=1e-15)

    def test_split_validation(self, pop):
        with pytest.raises(ValueError, match="shape"):
            pt.PerturbationSplit(pop, np.zeros((2, 2)), np.zeros((3, 3)))
        with pytest.raises(ValueError, match="symmetric"):
            bad = sym3(0.1, 0.0, 0.0)
            bad[0, 1] = 0.2
            pt.PerturbationSplit(pop, bad, np.zeros((3, 3)))

    def test_correlation_split_sample(self, pop):
        rng = np.random.default_rng(30)
        g = rng.standard_normal((400, 3))
        chol = np.linalg.cholesky(pop.sigma_y)
        data = linalg.mean_center(g @ chol.T)
        cov_hat = linalg.sample_covariance(data)
        split = pt.split_sample_correlation(pop, cov_hat, cov_hat)
        want = linalg.correlation_from_covariance(cov_hat) - pop.p_y
        assert np.array_equal(split.h_rho_y, want)
        assert np.all(np.abs(np.diag(split.h_rho_y)) == 0.0)


class TestRatioCondition:
    def test_hand_fixture(self, split_main):
        rep = pt.ratio_condition(split_main)
        assert rep.denominators[0] == pytest.approx(0.01, abs=1e-15)
        assert rep.numerators[0] == pytest.approx(-0.008, abs=1e-15)
        assert rep.ratios[0] == pytest.approx(-0.8, abs=1e-12)
        assert not rep.zero_denominator[0]
        assert rep.holds

    def test_violation_detected(self, pop):
        # blow up the sample perturbation so it dominates the noise
        split = pt.PerturbationSplit(
            population=pop,
            h_y=sym3(0.1, 0.05, 0.0),
            e_tilde_y=sym3(-0.3, 0.2, 0.0),
        )
        rep = pt.ratio_condition(split)
        assert abs(rep.numerators[0]) > abs(rep.denominators[0])
        assert not rep.holds

    def test_zero_denominator_paths(self, pop):
        # noise row orthogonal to the reference direction: 0.04 - 0.1*0.4 = 0
        h_y = sym3(0.1, 0.04, 0.0)
        quiet = pt.PerturbationSplit(
            population=make_pop(coupling=0.0), h_y=h_y, e_tilde_y=np.zeros((3, 3)),
        )
        rep = pt.ratio_condition(quiet)
        assert rep.zero_denominator[0]
        assert np.isnan(rep.ratios[0])
        assert rep.holds
        loud = pt.PerturbationSplit(population=pop, h_y=h_y, e_tilde_y=sym3(-0.03, 0.02, 0.0))
        rep = pt.ratio_condition(loud)
        assert rep.zero_denominator[0]
        assert not rep.holds

    def test_mode_changes_operands(self, split_main):
        proof = pt.ratio_condition(split_main, mode="proof")
        literal = pt.ratio_condition(split_main, mode="literal")
        # covariance splits use the covariance operands in both modes
        assert np.array_equal(proof.numerators, literal.numerators)
        with pytest.raises(ValueError, match="mode"):
            pt.ratio_condition(split_main, mode="tight")


class TestAngleCondition:
    def test_hand_fixture_fails(self, split_main):
        rep = pt.angle_condition(split_main)
        assert rep.lhs[0] == pytest.approx(math.sqrt(0.0053), abs=1e-15)
        assert rep.noise_norms[0] == pytest.approx(math.sqrt(0.0125), abs=1e-15)
        want_cos = 0.01 / (math.sqrt(0.0125) * math.sqrt(1.16))
        assert rep.cos_angles[0] == pytest.approx(want_cos, abs=1e-12)
        assert rep.rhs[0, 0] == pytest.approx(math.sqrt(0.0125) * want_cos, abs=1e-12)
        assert not rep.holds
        assert not rep.degenerate

    def test_small_perturbation_clears(self, split_small):
        rep = pt.angle_condition(split_small)
        assert rep.holds
        assert np.all(rep.margins >= 0)

    def test_degenerate_zero_noise(self, pop):
        split = pt.PerturbationSplit(
            population=pop, h_y=np.zeros((3, 3)), e_tilde_y=sym3(-0.03, 0.02, 0.0),
        )
        rep = pt.angle_condition(split)
        assert rep.degenerate
        assert not rep.holds
        assert np.isnan(rep.cos_angles[0])

    def test_angle_implies_norm_and_ratio(self, split_small):
        rep = pt.evaluate_conditions(split_small)
        assert rep.angle.holds
        assert rep.ratio.holds
        assert rep.norm_holds

    def test_norm_condition(self, split_main, split_small):
        assert pt.norm_condition(split_main)
        assert pt.norm_condition(split_small)
        big = pt.PerturbationSplit(
            population=split_main.population,
            h_y=sym3(0.01, 0.005, 0.0),
            e_tilde_y=sym3(-0.3, 0.2, 0.0),
        )
        assert not pt.norm_condition(big)


class TestCorrelationConditions:
    def make_corr_split(self, pop):
        return pt.CorrelationSplit(
            population=pop,
            h_rho_y=sym3(0.07, 0.035, 0.0),
            e_tilde_rho_y=sym3(-0.02, 0.014, 0.0),
        )

    def test_daggered_rows(self, pop):
        split = self.make_corr_split(pop)
        assert np.array_equal(split.h_dagger, [[0.035, 0.07]])
        assert np.array_equal(split.e_tilde_dagger, [[0.014, -0.02]])
        want = pop.e_dagger + split.e_tilde_dagger
        assert np.array_equal(split.perturbation_rows, want)

    def test_proof_and_literal_operands_differ(self, pop):
        split = self.make_corr_split(pop)
        proof = pt.ratio_condition(split, mode="proof")
        literal = pt.ratio_condition(split, mode="literal")
        assert not np.allclose(proof.numerators, literal.numerators)

    def test_proof_mode_reference(self, pop):
        split = self.make_corr_split(pop)
        rep = pt.angle_condition(split, mode="proof")
        projected = pop.inv_d_corr @ split.noise_rows
        want_cos = linalg.cosine_angle(projected[0], pop.corr_ref)
        assert rep.cos_angles[0] == pytest.approx(want_cos, abs=1e-15)


class TestEigengap:
    def test_interior_and_edges(self):
        assert pt.eigengap([4.0, 1.0], 0) == 3.0
        assert pt.eigengap([4.0, 1.0], 1) == 3.0
        assert pt.eigengap([9.0, 5.0, 1.0], 1) == 4.0
        assert pt.eigengap([9.0, 4.0, 1.0], 1) == 3.0
        assert pt.eigengap([3.0], 0) == np.inf

    def test_ties_give_zero(self):
        assert pt.eigengap([5.0, 5.0, 1.0], 0) == 0.0
        assert pt.eigengap([5.0, 5.0, 1.0], 1) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError, match="descending"):
            pt.eigengap([1.0, 2.0], 0)
        with pytest.raises(IndexError):
            pt.eigengap([2.0, 1.0], 5)


def bounds_oracle(split, delta, constant, angle):
    """Recompute every bound from raw arrays, bypassing cutoff_bounds."""
    pop = split.population
    values = pop.eigen_y.values
    gaps = []
    for j in delta:
        above = values[j - 1] - values[j] if j > 0 else np.inf
        below = values[j] - values[j + 1] if j < len(values) - 1 else np.inf
        gaps.append(min(above, below))
    gaps = np.array(gaps)
    pert_fro = float(np.sqrt((split.perturbation_joint ** 2).sum()))
    noise_fro = float(np.sqrt((split.h_y ** 2).sum()))
    tight = float(np.min(np.abs(angle.cos_angles)) * np.min(angle.noise_norms))
    necessary = float(np.min(angle.noise_norms))
    return {
        "lower": constant * pert_fro / gaps,
        "tight": constant * tight / gaps,
        "necessary": constant * necessary / gaps,
        "loose": constant * noise_fro / gaps,
    }


class TestCutoffBounds:
    def test_small_split_feasible(self, split_small):
        bounds = pt.cutoff_bounds(split_small)
        assert bounds.delta_set == (1,)
        assert bounds.feasible
        assert bounds.reason == ""
        assert bounds.agg_lower <= bounds.midpoint <= bounds.agg_upper_tight
        assert bounds.agg_upper_tight <= bounds.agg_upper_necessary
        assert bounds.agg_upper_necessary <= bounds.agg_upper_loose
        assert bounds.constant == pt.DEFAULT_CUTOFF_CONSTANT

    def test_matches_oracle(self, split_small):
        angle = pt.angle_condition(split_small)
        bounds = pt.cutoff_bounds(split_small)
        want = bounds_oracle(split_small, bounds.delta_set, bounds.constant, angle)
        assert np.allclose(bounds.lower, want["lower"], rtol=1e-14)
        assert np.allclose(bounds.upper_tight, want["tight"], rtol=1e-14)
        assert np.allclose(bounds.upper_necessary, want["necessary"], rtol=1e-14)
        assert np.allclose(bounds.upper_loose, want["loose"], rtol=1e-14)

    def test_infeasible_when_perturbation_dominates(self, split_main):
        bounds = pt.cutoff_bounds(split_main)
        assert not bounds.feasible
        assert bounds.reason == "perturbation floor exceeds the noise ceiling"
        assert math.isnan(bounds.midpoint)

    def test_degenerate_noise(self, pop):
        split = pt.PerturbationSplit(
            population=pop, h_y=np.zeros((3, 3)), e_tilde_y=sym3(-0.03, 0.02, 0.0),
        )
        bounds = pt.cutoff_bounds(split)
        assert not bounds.feasible
        assert bounds.reason == "degenerate angle geometry"
        assert math.isnan(bounds.agg_upper_tight)

    def test_constant_scales_linearly(self, split_small):
        base = pt.cutoff_bounds(split_small)
        double = pt.cutoff_bounds(split_small, constant=2 * pt.DEFAULT_CUTOFF_CONSTANT)
        assert np.allclose(double.lower, 2 * base.lower, rtol=1e-15)
        assert np.allclose(double.upper_loose, 2 * base.upper_loose, rtol=1e-15)
        assert double.agg_lower == pytest.approx(2 * base.agg_lower, rel=1e-15)

    def test_davis_kahan_constant(self, split_small):
        dk = pt.cutoff_bounds(split_small, constant=pt.DAVIS_KAHAN_CONSTANT)
        assert dk.constant == 2.0 ** 1.5
        ratio = pt.DAVIS_KAHAN_CONSTANT / pt.DEFAULT_CUTOFF_CONSTANT
        base = pt.cutoff_bounds(split_small)
        assert dk.agg_lower == pytest.approx(ratio * base.agg_lower, rel=1e-14)

    def test_constant_validation(self, split_small):
        for bad in (0.0, -1.0, np.nan):
            with pytest.raises(ValueError, match="constant"):
                pt.cutoff_bounds(split_small, constant=bad)

    def test_explicit_delta_set(self, split_small):
        bounds = pt.cutoff_bounds(split_small, delta_set=(0, 2))
        assert bounds.delta_set == (0, 2)
        assert bounds.gaps.shape == (2,)
        with pytest.raises(IndexError):
            pt.cutoff_bounds(split_small, delta_set=(7,))
        with pytest.raises(ValueError, match="empty"):
            pt.cutoff_bounds(split_small, delta_set=())

    def test_literal_correlation_needs_cov_split(self, pop, split_main):
        corr = pt.CorrelationSplit(
            population=pop,
            h_rho_y=sym3(0.07, 0.035, 0.0),
            e_tilde_rho_y=sym3(-0.02, 0.014, 0.0),
        )
        with pytest.raises(ValueError, match="cov"):
            pt.cutoff_bounds(corr, mode="literal")
        literal = pt.cutoff_bounds(corr, mode="literal", cov_split=split_main)
        cov_angle = pt.angle_condition(split_main)
        tight = float(np.min(np.abs(cov_angle.cos_angles)) * np.min(cov_angle.noise_norms))
        gap = pt.eigengap(pop.eigen_rho_y.values, literal.delta_set[0])
        assert literal.upper_tight[0] == pytest.approx(literal.constant * tight / gap, rel=1e-14)

    def test_correlation_proof_bounds(self):
        quiet = make_pop(coupling=0.001)
        corr_quiet = pt.CorrelationSplit(
            population=quiet,
            h_rho_y=sym3(0.07, 0.035, 0.0),
            e_tilde_rho_y=sym3(-0.0002, 0.00014, 0.0),
        )
        bounds = pt.cutoff_bounds(corr_quiet)
        assert bounds.feasible
        # loose bound uses the correlation-scale Frobenius norm
        noise_fro = linalg.frobenius_norm(corr_quiet.h_rho_y)
        gap = pt.eigengap(quiet.eigen_rho_y.values, bounds.delta_set[0])
        assert bounds.agg_upper_loose == pytest.approx(
            bounds.constant * noise_fro / gap, rel=1e-14
        )


class TestApproxCoefficients:
    def test_matches_ratio_report(self, split_main):
        rep = pt.ratio_condition(split_main)
        coeffs = pt.approx_coefficients(split_main)
        assert np.array_equal(coeffs.base, rep.denominators)
        assert np.array_equal(coeffs.perturbed, rep.numerators)

    def test_dense_agrees_without_cov_noise(self, pop):
        # exact binary-fraction fixture: both routes round identically
        split = pt.PerturbationSplit(
            population=pop,
            h_y=sym3(0.1, 0.0, 0.0),
            e_tilde_y=sym3(-0.03125, 0.0, 0.0),
        )
        starred = pt.approx_coefficients(split)
        dense = pt.approx_coefficients_dense(split)
        assert np.allclose(dense.base, starred.base, atol=1e-16)
        assert np.allclose(dense.perturbed, starred.perturbed, atol=1e-16)
        assert starred.base[0] == pytest.approx(-0.04, abs=1e-16)

    def test_dense_gap_shrinks_quadratically(self, pop):
        # the clean sample sees only the scaled noise, so the two routes
        # differ by the dense second-order term alone; the response-noise
        # entry outside the block is what feeds it
        def gap(scale):
            split = pt.PerturbationSplit(
                population=pop,
                h_y=sym3(scale, 0.5 * scale, 0.7 * scale),
                e_tilde_y=np.zeros((3, 3)),
            )
            starred = pt.approx_coefficients(split)
            dense = pt.approx_coefficients_dense(split)
            return float(np.max(np.abs(dense.base - starred.base)))

        g1 = gap(0.08)
        g2 = gap(0.04)
        assert g1 > 0
        assert g2 == pytest.approx(0.25 * g1, rel=1e-10)


class TestRateEstimate:
    def test_exact_power_law(self):
        ns = np.array([100.0, 400.0, 1600.0])
        vals = 3.0 * ns ** -0.5
        assert pt.convergence_rate_estimate(ns, vals) == pytest.approx(-0.5, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="matching"):
            pt.convergence_rate_estimate([1.0, 2.0], [1.0])
        with pytest.raises(ValueError, match="two points"):
            pt.convergence_rate_estimate([1.0], [1.0])
        with pytest.raises(ValueError, match="positive"):
            pt.convergence_rate_estimate([1.0, 2.0], [1.0, -1.0])
