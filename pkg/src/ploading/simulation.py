"""Seeded Monte Carlo studies of block discarding under perturbation.

Every random draw flows through a ``numpy.random.Philox`` generator
keyed by ``SeedSequence(entropy=master_seed, spawn_key=(n_index,
replication))``, so a trial's data depends only on the master seed and
its grid position.  Studies therefore reproduce bit for bit at any
parallelism level.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg, perturbation, pla
from .exceptions import ConstructionError, DegenerateDataError
from .ols import discard_by_ols, ols_fit
from .perturbation import (
    DEFAULT_CUTOFF_CONSTANT,
    CorrelationSplit,
    PerturbationSplit,
    Population,
    angle_condition,
    approx_coefficients,
    cutoff_bounds,
    evaluate_conditions,
    norm_condition,
    split_sample,
    split_sample_correlation,
)

TAU_MODES = ("fixed", "midpoint", "lower", "zero")


def stream_generator(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    """Counter-based generator for one logical stream."""
    return np.random.Generator(np.random.Philox(seed_seq))


def trial_substream(master_seed: int, n_index: int, replication: int) -> np.random.SeedSequence:
    """Independent stream for one grid cell, stable under reordering."""
    return np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(int(n_index), int(replication))
    )


def _unit_spd_block(k: int, rng: np.random.Generator) -> np.ndarray:
    if k == 1:
        return np.ones((1, 1))
    g = rng.standard_normal((k, k))
    a = g @ g.T + k * np.eye(k)
    d = np.sqrt(np.diag(a))
    out = linalg.symmetrize(a / np.outer(d, d))
    np.fill_diagonal(out, 1.0)
    return out


def make_population(
    m: int,
    d_size: int,
    *,
    signal: float = 0.8,
    perturb_eps: float = 0.1,
    seed: int = 0,
    cov_perturbation: bool = True,
    var_y: float | None = None,
    max_tries: int = 50,
) -> Population:
    """Draw a block-structured population with a one-pair perturbation.

    The first ``d_size`` variables form the decoupled block; both
    diagonal blocks are unit-variance SPD draws.  The response loads
    only on the complement with total strength ``signal``; its variance
    defaults to the value that fixes the conditional response variance
    at one, or can be forced with ``var_y``.  The perturbation couples
    the first block variable to the first complement variable with
    weight ``perturb_eps`` and, when ``cov_perturbation`` is set, also
    shifts that block variable's response covariance by the same
    amount.  Draws failing positive definiteness are retried up to
    ``max_tries`` times before ``ConstructionError``.
    """
    if m < 2:
        raise ValueError(f"need at least 2 variables, got {m}")
    if not 1 <= d_size < m:
        raise ValueError(f"d_size must lie in [1, {m - 1}], got {d_size}")
    if signal < 0 or not np.isfinite(signal):
        raise ValueError(f"signal must be finite and non-negative, got {signal!r}")
    if perturb_eps < 0 or not np.isfinite(perturb_eps):
        raise ValueError(f"perturb_eps must be finite and non-negative, got {perturb_eps!r}")
    if max_tries < 1:
        raise ValueError(f"max_tries must be at least 1, got {max_tries}")
    rng = stream_generator(np.random.SeedSequence(int(seed)))
    d_set = tuple(range(d_size))
    k = m - d_size
    last_error = ""
    for _ in range(max_tries):
        sigma = np.zeros((m, m))
        sigma[:d_size, :d_size] = _unit_spd_block(d_size, rng)
        sigma[d_size:, d_size:] = _unit_spd_block(k, rng)
        z = rng.standard_normal(k)
        z_norm = float(np.linalg.norm(z))
        if z_norm == 0.0:
            continue
        cov = np.zeros(m)
        cov[d_size:] = signal * z / z_norm
        explained = float(
            cov[d_size:] @ linalg.solve_spd(sigma[d_size:, d_size:], cov[d_size:])
        )
        y_var = explained + 1.0 if var_y is None else float(var_y)
        e = np.zeros((m, m))
        e[0, d_size] = e[d_size, 0] = perturb_eps
        e_cov = np.zeros(m)
        if cov_perturbation:
            e_cov[0] = perturb_eps
        try:
            return Population(
                sigma=sigma, cov=cov, var_y=y_var, e=e, e_cov=e_cov, d_set=d_set
            )
        except DegenerateDataError as exc:
            last_error = str(exc)
            continue
    raise ConstructionError(
        f"no positive definite population in {max_tries} tries"
        + (f" (last failure: {last_error})" if last_error else "")
    )


def sample_gaussian(
    population: Population, n: int, rng: np.random.Generator, *, perturbed: bool = False
) -> np.ndarray:
    """Centred joint Gaussian sample, response in the last column.

    The standard normal block is drawn before the covariance factor is
    touched, so clean and perturbed draws from generators in the same
    state share their underlying normals.
    """
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    z = rng.standard_normal((n, population.m + 1))
    target = population.sigma_tilde_y if perturbed else population.sigma_y
    factor = np.linalg.cholesky(target)
    return linalg.mean_center(z @ factor.T)


def _resolve_tau(tau, bounds: perturbation.CutoffBounds) -> tuple[float, str]:
    top = np.nextafter(1.0, 0.0)
    if tau != "auto":
        return float(np.clip(float(tau), 0.0, top)), "fixed"
    if bounds.feasible:
        return float(np.clip(bounds.midpoint, 0.0, top)), "midpoint"
    if np.isfinite(bounds.agg_lower):
        return float(np.clip(bounds.agg_lower, 0.0, top)), "lower"
    return 0.0, "zero"


@dataclass(frozen=True)
class TrialOutcome:
    """Flat, serialisable record of one simulated trial."""

    n: int
    replication: int
    tau: float
    tau_mode: str
    feasible: bool
    agg_lower: float
    agg_upper_tight: float
    agg_upper_necessary: float
    agg_upper_loose: float
    pla_base_candidates: int
    pla_pert_candidates: int
    pla_base_discards_block: bool
    pla_pert_discards_block: bool
    ols_base_p_block_min: float
    ols_pert_p_block_min: float
    ols_base_discards_block: bool
    ols_pert_discards_block: bool
    ratio_holds: bool
    angle_holds: bool
    angle_degenerate: bool
    norm_holds: bool
    corr_angle_holds: bool
    corr_angle_degenerate: bool
    corr_norm_holds: bool
    magnitude_ok: bool
    coef_gap_base: float
    coef_gap_pert: float
    noise_fro: float
    noise_joint_fro: float
    noise_rho_fro: float
    noise_rho_joint_fro: float
    e_tilde_fro: float
    pert_joint_fro: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def run_trial(
    population: Population,
    n: int,
    *,
    seed_seq: np.random.SeedSequence,
    tau="auto",
    alpha: float = 0.05,
    basis: str = "covariance",
    constant: float = DEFAULT_CUTOFF_CONSTANT,
    corr_mode: str = "proof",
) -> TrialOutcome:
    """Draw one clean and one perturbed sample and measure everything.

    ``tau`` is either a number or ``"auto"``, in which case the cut-off
    window for the requested basis decides: the window midpoint when
    feasible, otherwise the smallest cut-off that clears the
    perturbation, otherwise zero.
    """
    if basis not in pla.VALID_BASES:
        raise ValueError(f"basis must be one of {pla.VALID_BASES}, got {basis!r}")
    base_child, pert_child = seed_seq.spawn(2)
    base_data = sample_gaussian(population, n, stream_generator(base_child))
    pert_data = sample_gaussian(population, n, stream_generator(pert_child), perturbed=True)
    m = population.m
    d = list(population.d_set)
    cov_y_base = linalg.sample_covariance(base_data)
    cov_y_pert = linalg.sample_covariance(pert_data)
    split = split_sample(population, cov_y_base, cov_y_pert)
    corr_split = split_sample_correlation(population, cov_y_base, cov_y_pert)
    if basis == "covariance":
        bounds = cutoff_bounds(split, constant=constant)
    else:
        bounds = cutoff_bounds(
            corr_split, constant=constant, mode=corr_mode, cov_split=split
        )
    tau_value, tau_mode = _resolve_tau(tau, bounds)
    report_base = pla.run_pla(base_data[:, :m], basis=basis, tau=tau_value)
    report_pert = pla.run_pla(pert_data[:, :m], basis=basis, tau=tau_value)
    fit_base = ols_fit(base_data[:, :m], base_data[:, m])
    fit_pert = ols_fit(pert_data[:, :m], pert_data[:, m])
    discard_base = set(discard_by_ols(fit_base, alpha))
    discard_pert = set(discard_by_ols(fit_pert, alpha))
    conditions = evaluate_conditions(split)
    corr_angle = angle_condition(corr_split, corr_mode)
    corr_norm = norm_condition(corr_split)
    coeffs = approx_coefficients(split)
    magnitude_ok = bool(np.all(np.abs(coeffs.perturbed) <= np.abs(coeffs.base)))
    gap_base = float(np.max(np.abs(fit_base.coefficients[d] - coeffs.base)))
    gap_pert = float(np.max(np.abs(fit_pert.coefficients[d] - coeffs.perturbed)))
    return TrialOutcome(
        n=int(n),
        replication=int(seed_seq.spawn_key[1]) if len(seed_seq.spawn_key) > 1 else -1,
        tau=tau_value,
        tau_mode=tau_mode,
        feasible=bool(bounds.feasible),
        agg_lower=float(bounds.agg_lower),
        agg_upper_tight=float(bounds.agg_upper_tight),
        agg_upper_necessary=float(bounds.agg_upper_necessary),
        agg_upper_loose=float(bounds.agg_upper_loose),
        pla_base_candidates=len(report_base.candidates),
        pla_pert_candidates=len(report_pert.candidates),
        pla_base_discards_block=pla.is_discardable(report_base.eigen, d, tau_value),
        pla_pert_discards_block=pla.is_discardable(report_pert.eigen, d, tau_value),
        ols_base_p_block_min=float(np.min(fit_base.p_values[d])),
        ols_pert_p_block_min=float(np.min(fit_pert.p_values[d])),
        ols_base_discards_block=set(d) <= discard_base,
        ols_pert_discards_block=set(d) <= discard_pert,
        ratio_holds=conditions.ratio.holds,
        angle_holds=conditions.angle.holds,
        angle_degenerate=conditions.angle.degenerate,
        norm_holds=conditions.norm_holds,
        corr_angle_holds=corr_angle.holds,
        corr_angle_degenerate=corr_angle.degenerate,
        corr_norm_holds=corr_norm,
        magnitude_ok=magnitude_ok,
        coef_gap_base=gap_base,
        coef_gap_pert=gap_pert,
        noise_fro=linalg.frobenius_norm(split.h),
        noise_joint_fro=linalg.frobenius_norm(split.h_y),
        noise_rho_fro=linalg.frobenius_norm(corr_split.h_rho),
        noise_rho_joint_fro=linalg.frobenius_norm(corr_split.h_rho_y),
        e_tilde_fro=linalg.frobenius_norm(split.e_tilde),
        pert_joint_fro=linalg.frobenius_norm(split.perturbation_joint),
    )


@dataclass(frozen=True)
class StudyResult:
    outcomes: tuple[TrialOutcome, ...]
    n_grid: tuple[int, ...]
    replications: int
    master_seed: int
    tau: float | str
    alpha: float
    basis: str
    constant: float
    corr_mode: str


def run_study(
    population: Population,
    n_grid,
    replications: int,
    master_seed: int,
    *,
    tau="auto",
    alpha: float = 0.05,
    basis: str = "covariance",
    constant: float = DEFAULT_CUTOFF_CONSTANT,
    corr_mode: str = "proof",
    parallelism: int = 1,
) -> StudyResult:
    """Run the full grid of trials; results are ordered by (n, replication).

    Parallelism only affects wall time: trial seeds derive from grid
    position, and results are gathered in submission order.
    """
    n_grid = tuple(int(n) for n in n_grid)
    if not n_grid or any(n < 2 for n in n_grid):
        raise ValueError("n_grid must contain sample sizes of at least 2")
    replications = int(replications)
    if replications < 1:
        raise ValueError(f"replications must be at least 1, got {replications}")
    parallelism = int(parallelism)
    if parallelism < 1:
        raise ValueError(f"parallelism must be at least 1, got {parallelism}")
    jobs = [
        (n_index, n, rep)
        for n_index, n in enumerate(n_grid)
        for rep in range(replications)
    ]

    def one(job: tuple[int, int, int]) -> TrialOutcome:
        n_index, n, rep = job
        return run_trial(
            population,
            n,
            seed_seq=trial_substream(master_seed, n_index, rep),
            tau=tau,
            alpha=alpha,
            basis=basis,
            constant=constant,
            corr_mode=corr_mode,
        )

    if parallelism == 1:
        outcomes = [one(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(one, jobs))
    return StudyResult(
        outcomes=tuple(outcomes),
        n_grid=n_grid,
        replications=replications,
        master_seed=int(master_seed),
        tau=tau if tau == "auto" else float(tau),
        alpha=float(alpha),
        basis=basis,
        constant=float(constant),
        corr_mode=corr_mode,
    )


def _rate(outcomes, field: str) -> float:
    return float(np.mean([getattr(o, field) for o in outcomes]))


def summarize_study(study: StudyResult) -> dict:
    """Aggregate a study into a JSON-ready summary.

    Groups trials by sample size, reports discard rates and condition
    frequencies, estimates log-log convergence slopes across the grid,
    and counts violations of the implication chain between conditions.
    """
    per_n = []
    for n in study.n_grid:
        rows = [o for o in study.outcomes if o.n == n]
        per_n.append(
            {
                "n": n,
                "trials": len(rows),
                "mean_noise_fro": _rate(rows, "noise_fro"),
                "mean_noise_rho_fro": _rate(rows, "noise_rho_fro"),
                "mean_noise_joint_fro": _rate(rows, "noise_joint_fro"),
                "mean_coef_gap_base": _rate(rows, "coef_gap_base"),
                "mean_coef_gap_pert": _rate(rows, "coef_gap_pert"),
                "mean_tau": _rate(rows, "tau"),
                "feasible_rate": _rate(rows, "feasible"),
                "pla_base_discard_rate": _rate(rows, "pla_base_discards_block"),
                "pla_pert_discard_rate": _rate(rows, "pla_pert_discards_block"),
                "ols_base_discard_rate": _rate(rows, "ols_base_discards_block"),
                "ols_pert_discard_rate": _rate(rows, "ols_pert_discards_block"),
                "ratio_rate": _rate(rows, "ratio_holds"),
                "angle_rate": _rate(rows, "angle_holds"),
                "norm_rate": _rate(rows, "norm_holds"),
                "corr_angle_rate": _rate(rows, "corr_angle_holds"),
                "corr_norm_rate": _rate(rows, "corr_norm_holds"),
                "angle_degenerate_count": int(
                    sum(o.angle_degenerate for o in rows)
                ),
            }
        )
    slopes: dict[str, float | None] = {}
    for key, field in (
        ("noise_fro", "mean_noise_fro"),
        ("noise_rho_fro", "mean_noise_rho_fro"),
        ("coef_gap_base", "mean_coef_gap_base"),
        ("coef_gap_pert", "mean_coef_gap_pert"),
    ):
        means = [row[field] for row in per_n]
        if len(per_n) >= 2 and all(v > 0 for v in means):
            slopes[key] = perturbation.convergence_rate_estimate(
                [row["n"] for row in per_n], means
            )
        else:
            slopes[key] = None
    violations = {
        "angle_to_ratio": sum(
            1 for o in study.outcomes if o.angle_holds and not o.ratio_holds
        ),
        "ratio_to_magnitude": sum(
            1 for o in study.outcomes if o.ratio_holds and not o.magnitude_ok
        ),
        "angle_to_norm": sum(
            1 for o in study.outcomes if o.angle_holds and not o.norm_holds
        ),
        "corr_angle_to_corr_norm": sum(
            1 for o in study.outcomes if o.corr_angle_holds and not o.corr_norm_holds
        ),
    }
    return {
        "n_grid": list(study.n_grid),
        "replications": study.replications,
        "master_seed": study.master_seed,
        "tau": study.tau,
        "alpha": study.alpha,
        "basis": study.basis,
        "constant": study.constant,
        "corr_mode": study.corr_mode,
        "trials": len(study.outcomes),
        "per_n": per_n,
        "slopes": slopes,
        "implication_violations": violations,
    }
