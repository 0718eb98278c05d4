"""Noise decompositions around a block-structured population.

A population covariance ``sigma`` is block diagonal between a variable
block D and its complement, the response correlates only with the
complement, and a sparse perturbation ``e`` lives exclusively on the
structural zeros.  Sample estimates are then split into the population
part, the sparse perturbation, and dense sampling noise, and the
machinery here answers two questions about that split:

* do the perturbation rows stay inside the envelope set by pure
  sampling noise (ratio, angle and row-norm conditions), and
* which loading cut-offs are simultaneously large enough to absorb the
  perturbation and small enough to keep the sampling noise visible
  (``cutoff_bounds``).

All conditions are evaluated on starred row assemblies: for each d in
D the row ``[cov-vector entry | cross-block row]`` of the relevant
perturbation, projected through the block inverse onto the reference
direction ``(1, -inv(sigma[Dc,Dc]) @ cov[Dc])``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .exceptions import (
    BlockMismatchError,
    DegenerateDataError,
    StructuralZeroError,
)

# Cut-off constant from the eigenvector perturbation bound; the
# classical Davis-Kahan constant is selectable for looser, safer bounds.
DEFAULT_CUTOFF_CONSTANT = 2.0 ** (2.0 / 3.0)
DAVIS_KAHAN_CONSTANT = 2.0**1.5

# |denominator| below this is treated as exactly zero in ratio tests.
ZERO_DENOMINATOR_TOL = 1e-14

# Entries this close to zero on required structural zeros are snapped;
# anything larger is a modelling error, not round-off.
BLOCK_ZERO_TOL = 1e-12

VALID_ANGLE_MODES = ("proof", "literal")


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def _offending(pairs, limit: int = 3) -> str:
    shown = ", ".join(f"({i}, {j})" for i, j in pairs[:limit])
    if len(pairs) > limit:
        shown += f" and {len(pairs) - limit} more"
    return shown


def _snap_zeros(arr: np.ndarray, mask: np.ndarray, what: str) -> np.ndarray:
    """Zero out ``arr[mask]`` entries within BLOCK_ZERO_TOL, reject larger."""
    bad = mask & (np.abs(arr) > BLOCK_ZERO_TOL)
    if np.any(bad):
        if arr.ndim == 2:
            pairs = list(zip(*np.nonzero(bad)))
            raise StructuralZeroError(f"{what} at {_offending(pairs)}")
        idx = ", ".join(str(int(i)) for i in np.nonzero(bad)[0][:3])
        raise StructuralZeroError(f"{what} at index {idx}")
    out = arr.copy()
    out[mask] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class Population:
    """Block-structured population with a sparse off-block perturbation.

    Parameters
    ----------
    sigma : (m, m) covariance of the predictors, exactly block diagonal
        between ``d_set`` and its complement.
    cov : (m,) covariance between predictors and the response, exactly
        zero on ``d_set``.
    var_y : response variance.
    e : (m, m) symmetric perturbation supported only where ``sigma``
        is zero (in particular, zero diagonal).
    e_cov : (m,) perturbation of ``cov`` supported only where ``cov``
        is zero.
    d_set : indices of the decoupled block.

    Entries that must be structural zeros are snapped to exact zero
    when within ``BLOCK_ZERO_TOL`` and rejected otherwise.  Both the
    clean and the perturbed joint covariance must be positive definite.
    """

    sigma: np.ndarray
    cov: np.ndarray
    var_y: float
    e: np.ndarray
    e_cov: np.ndarray
    d_set: tuple[int, ...]

    def __post_init__(self):
        sigma = linalg.as_matrix(self.sigma, "sigma")
        if sigma.shape[0] != sigma.shape[1]:
            raise ValueError(f"sigma must be square, got {sigma.shape}")
        m = sigma.shape[0]
        linalg.require_symmetric(sigma, "sigma")
        cov = linalg.as_vector(self.cov, "cov")
        if cov.shape[0] != m:
            raise ValueError(f"cov has length {cov.shape[0]}, expected {m}")
        e = linalg.as_matrix(self.e, "e")
        if e.shape != (m, m):
            raise ValueError(f"e has shape {e.shape}, expected {(m, m)}")
        linalg.require_symmetric(e, "e")
        e_cov = linalg.as_vector(self.e_cov, "e_cov")
        if e_cov.shape[0] != m:
            raise ValueError(f"e_cov has length {e_cov.shape[0]}, expected {m}")
        d_set = tuple(sorted(int(i) for i in self.d_set))
        if len(set(d_set)) != len(d_set):
            raise ValueError("d_set contains duplicate indices")
        if not d_set or len(d_set) >= m:
            raise ValueError(f"d_set must be a non-empty proper subset of {m} variables")
        if d_set[0] < 0 or d_set[-1] >= m:
            raise ValueError(f"d_set indices out of range for {m} variables")
        dc = [i for i in range(m) if i not in d_set]
        cross = np.zeros((m, m), dtype=bool)
        cross[np.ix_(list(d_set), dc)] = True
        cross[np.ix_(dc, list(d_set))] = True
        sigma = _snap_zeros(sigma, cross, "sigma couples the block and its complement")
        cov_mask = np.zeros(m, dtype=bool)
        cov_mask[list(d_set)] = True
        cov = _snap_zeros(cov, cov_mask, "cov is nonzero on the decoupled block")
        e_hits = e != 0.0
        if np.any(e_hits & (sigma != 0.0)):
            pairs = list(zip(*np.nonzero(e_hits & (sigma != 0.0))))
            raise StructuralZeroError(
                f"e overlaps nonzero sigma entries at {_offending(pairs)}"
            )
        if np.any(np.diag(e) != 0.0):
            idx = ", ".join(str(int(i)) for i in np.nonzero(np.diag(e))[0][:3])
            raise StructuralZeroError(f"e has nonzero diagonal at index {idx}")
        if np.any((e_cov != 0.0) & (cov != 0.0)):
            idx = ", ".join(
                str(int(i)) for i in np.nonzero((e_cov != 0.0) & (cov != 0.0))[0][:3]
            )
            raise StructuralZeroError(f"e_cov overlaps nonzero cov entries at index {idx}")
        object.__setattr__(self, "sigma", _readonly(sigma))
        object.__setattr__(self, "cov", _readonly(cov))
        object.__setattr__(self, "var_y", float(self.var_y))
        object.__setattr__(self, "e", _readonly(e))
        object.__setattr__(self, "e_cov", _readonly(e_cov))
        object.__setattr__(self, "d_set", d_set)
        for name, arr in (("sigma_y", self.sigma_y), ("sigma_tilde_y", self.sigma_tilde_y)):
            try:
                np.linalg.cholesky(arr)
            except np.linalg.LinAlgError:
                raise DegenerateDataError(
                    f"{name} is not positive definite"
                ) from None

    @property
    def m(self) -> int:
        return self.sigma.shape[0]

    @cached_property
    def dc_set(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.m) if i not in self.d_set)

    @cached_property
    def sigma_y(self) -> np.ndarray:
        return _readonly(_join(self.sigma, self.cov, self.var_y))

    @cached_property
    def e_y(self) -> np.ndarray:
        return _readonly(_join(self.e, self.e_cov, 0.0))

    @cached_property
    def sigma_tilde(self) -> np.ndarray:
        return _readonly(self.sigma + self.e)

    @cached_property
    def sigma_tilde_y(self) -> np.ndarray:
        # disjoint supports make this addition exact in floats
        return _readonly(self.sigma_y + self.e_y)

    @cached_property
    def p(self) -> np.ndarray:
        return _readonly(linalg.correlation_from_covariance(self.sigma))

    @cached_property
    def p_y(self) -> np.ndarray:
        return _readonly(linalg.correlation_from_covariance(self.sigma_y))

    @cached_property
    def p_tilde_y(self) -> np.ndarray:
        return _readonly(linalg.correlation_from_covariance(self.sigma_tilde_y))

    @cached_property
    def e_rho_y(self) -> np.ndarray:
        # e leaves the diagonal alone, so entries off its support cancel
        # bitwise and this difference is again exactly sparse
        return _readonly(self.p_tilde_y - self.p_y)

    @cached_property
    def corr(self) -> np.ndarray:
        scale = np.sqrt(np.diag(self.sigma) * self.var_y)
        return _readonly(self.cov / scale)

    @cached_property
    def cov_star(self) -> np.ndarray:
        """Reference direction (1, -inv(sigma[Dc,Dc]) @ cov[Dc])."""
        dc = list(self.dc_set)
        tail = linalg.solve_spd(self.sigma[np.ix_(dc, dc)], self.cov[dc])
        return _readonly(np.concatenate(([1.0], -tail)))

    @cached_property
    def corr_ref(self) -> np.ndarray:
        """Correlation-scale analogue of ``cov_star``."""
        dc = list(self.dc_set)
        tail = linalg.solve_spd(self.p[np.ix_(dc, dc)], self.corr[dc])
        return _readonly(np.concatenate(([1.0], -tail)))

    @cached_property
    def inv_d_cov(self) -> np.ndarray:
        d = list(self.d_set)
        return _readonly(linalg.solve_spd(self.sigma[np.ix_(d, d)], np.eye(len(d))))

    @cached_property
    def inv_d_corr(self) -> np.ndarray:
        d = list(self.d_set)
        return _readonly(linalg.solve_spd(self.p[np.ix_(d, d)], np.eye(len(d))))

    @cached_property
    def beta(self) -> np.ndarray:
        """Population regression coefficients; zero on the block."""
        return _readonly(linalg.solve_spd(self.sigma, self.cov))

    @cached_property
    def eigen_y(self) -> linalg.EigenSystem:
        return linalg.eigh(self.sigma_y)

    @cached_property
    def eigen_rho_y(self) -> linalg.EigenSystem:
        return linalg.eigh(self.p_y)

    @cached_property
    def e_star(self) -> np.ndarray:
        return _readonly(_star(self.e, self.e_cov, self.d_set, self.dc_set))

    @cached_property
    def e_dagger(self) -> np.ndarray:
        rho = self.e_rho_y
        return _readonly(
            _star(rho[: self.m, : self.m], rho[: self.m, self.m], self.d_set, self.dc_set)
        )

    def block_eigen_indices(self, basis: str = "covariance") -> tuple[int, ...]:
        """Joint-matrix eigenpairs carried by the decoupled block.

        An eigenpair belongs to the block when more than half of its
        squared loading mass sits on the block's coordinates.  Exactly
        |D| of them must qualify; anything else raises
        ``BlockMismatchError``.
        """
        if basis == "covariance":
            eigen = self.eigen_y
        elif basis == "correlation":
            eigen = self.eigen_rho_y
        else:
            raise ValueError(f"basis must be 'covariance' or 'correlation', got {basis!r}")
        mass = (eigen.vectors[list(self.d_set), :] ** 2).sum(axis=0)
        found = tuple(int(j) for j in np.nonzero(mass > 0.5)[0])
        if len(found) != len(self.d_set):
            raise BlockMismatchError(
                f"block of {len(self.d_set)} variables holds {len(found)} joint eigenpairs",
                found=found,
            )
        return found


def _join(matrix: np.ndarray, vector: np.ndarray, corner: float) -> np.ndarray:
    m = matrix.shape[0]
    joint = np.zeros((m + 1, m + 1), dtype=np.float64)
    joint[:m, :m] = matrix
    joint[:m, m] = vector
    joint[m, :m] = vector
    joint[m, m] = corner
    return joint


def _star(matrix: np.ndarray, vector: np.ndarray, d_set, dc_set) -> np.ndarray:
    """Row assembly [vector[D] | matrix[D, Dc]] of shape (|D|, 1 + |Dc|)."""
    d = list(d_set)
    dc = list(dc_set)
    out = np.empty((len(d), 1 + len(dc)), dtype=np.float64)
    out[:, 0] = vector[d]
    out[:, 1:] = matrix[np.ix_(d, dc)]
    return out


def _split_views(joint: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    return joint[:m, :m], joint[:m, m]


@dataclass(frozen=True, eq=False)
class PerturbationSplit:
    """Covariance-scale decomposition of two joint sample estimates.

    ``h_y`` is the deviation of the clean sample's joint covariance
    from the population; ``e_tilde_y`` is the deviation of the
    perturbed sample's joint covariance from the perturbed population.
    """

    population: Population
    h_y: np.ndarray
    e_tilde_y: np.ndarray

    def __post_init__(self):
        k = self.population.m + 1
        h_y = linalg.as_matrix(self.h_y, "h_y")
        e_tilde_y = linalg.as_matrix(self.e_tilde_y, "e_tilde_y")
        for name, arr in (("h_y", h_y), ("e_tilde_y", e_tilde_y)):
            if arr.shape != (k, k):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(k, k)}")
            linalg.require_symmetric(arr, name)
        object.__setattr__(self, "h_y", _readonly(h_y))
        object.__setattr__(self, "e_tilde_y", _readonly(e_tilde_y))

    @property
    def h(self) -> np.ndarray:
        return self.h_y[: self.population.m, : self.population.m]

    @property
    def h_cov(self) -> np.ndarray:
        return self.h_y[: self.population.m, self.population.m]

    @property
    def e_tilde(self) -> np.ndarray:
        return self.e_tilde_y[: self.population.m, : self.population.m]

    @property
    def e_tilde_cov(self) -> np.ndarray:
        return self.e_tilde_y[: self.population.m, self.population.m]

    @cached_property
    def h_star(self) -> np.ndarray:
        pop = self.population
        return _readonly(_star(self.h, self.h_cov, pop.d_set, pop.dc_set))

    @cached_property
    def e_tilde_star(self) -> np.ndarray:
        pop = self.population
        return _readonly(_star(self.e_tilde, self.e_tilde_cov, pop.d_set, pop.dc_set))

    @cached_property
    def perturbation_rows(self) -> np.ndarray:
        """Starred rows of the total perturbation seen by the second sample."""
        return _readonly(self.population.e_star + self.e_tilde_star)

    @cached_property
    def noise_rows(self) -> np.ndarray:
        """Starred rows of the pure sampling noise of the first sample."""
        return self.h_star

    @cached_property
    def perturbation_joint(self) -> np.ndarray:
        """Joint-matrix total perturbation e_y + e_tilde_y."""
        return _readonly(self.population.e_y + self.e_tilde_y)


@dataclass(frozen=True, eq=False)
class CorrelationSplit:
    """Correlation-scale decomposition of two joint sample estimates."""

    population: Population
    h_rho_y: np.ndarray
    e_tilde_rho_y: np.ndarray

    def __post_init__(self):
        k = self.population.m + 1
        h_rho_y = linalg.as_matrix(self.h_rho_y, "h_rho_y")
        e_tilde_rho_y = linalg.as_matrix(self.e_tilde_rho_y, "e_tilde_rho_y")
        for name, arr in (("h_rho_y", h_rho_y), ("e_tilde_rho_y", e_tilde_rho_y)):
            if arr.shape != (k, k):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(k, k)}")
            linalg.require_symmetric(arr, name)
        object.__setattr__(self, "h_rho_y", _readonly(h_rho_y))
        object.__setattr__(self, "e_tilde_rho_y", _readonly(e_tilde_rho_y))

    @property
    def h_rho(self) -> np.ndarray:
        return self.h_rho_y[: self.population.m, : self.population.m]

    @property
    def h_rho_cov(self) -> np.ndarray:
        return self.h_rho_y[: self.population.m, self.population.m]

    @cached_property
    def h_dagger(self) -> np.ndarray:
        pop = self.population
        return _readonly(_star(self.h_rho, self.h_rho_cov, pop.d_set, pop.dc_set))

    @cached_property
    def e_tilde_dagger(self) -> np.ndarray:
        pop = self.population
        m = pop.m
        return _readonly(
            _star(
                self.e_tilde_rho_y[:m, :m],
                self.e_tilde_rho_y[:m, m],
                pop.d_set,
                pop.dc_set,
            )
        )

    @cached_property
    def perturbation_rows(self) -> np.ndarray:
        return _readonly(self.population.e_dagger + self.e_tilde_dagger)

    @cached_property
    def noise_rows(self) -> np.ndarray:
        return self.h_dagger

    @cached_property
    def perturbation_joint(self) -> np.ndarray:
        return _readonly(self.population.e_rho_y + self.e_tilde_rho_y)


def split_sample(
    population: Population, sample_cov_y, sample_cov_y_tilde
) -> PerturbationSplit:
    """Split two joint sample covariances around the population.

    ``sample_cov_y`` comes from the clean population, ``sample_cov_y_tilde``
    from the perturbed one; both are (m+1, m+1) with the response last.
    """
    cov_y = linalg.as_matrix(sample_cov_y, "sample_cov_y")
    cov_y_tilde = linalg.as_matrix(sample_cov_y_tilde, "sample_cov_y_tilde")
    return PerturbationSplit(
        population=population,
        h_y=cov_y - population.sigma_y,
        e_tilde_y=cov_y_tilde - population.sigma_tilde_y,
    )


def split_sample_correlation(
    population: Population, sample_cov_y, sample_cov_y_tilde
) -> CorrelationSplit:
    """Correlation-scale counterpart of ``split_sample``."""
    cov_y = linalg.as_matrix(sample_cov_y, "sample_cov_y")
    cov_y_tilde = linalg.as_matrix(sample_cov_y_tilde, "sample_cov_y_tilde")
    r_y = linalg.correlation_from_covariance(cov_y)
    r_y_tilde = linalg.correlation_from_covariance(cov_y_tilde)
    return CorrelationSplit(
        population=population,
        h_rho_y=r_y - population.p_y,
        e_tilde_rho_y=r_y_tilde - population.p_tilde_y,
    )


def _operands(split, mode: str) -> tuple[np.ndarray, np.ndarray]:
    if mode not in VALID_ANGLE_MODES:
        raise ValueError(f"mode must be one of {VALID_ANGLE_MODES}, got {mode!r}")
    pop = split.population
    if isinstance(split, CorrelationSplit) and mode == "proof":
        return pop.inv_d_corr, pop.corr_ref
    return pop.inv_d_cov, pop.cov_star


@dataclass(frozen=True, eq=False)
class RatioConditionReport:
    """Per-variable comparison of perturbed and clean approximations.

    ``numerators`` are the approximated coefficients of the perturbed
    sample on the block, ``denominators`` those of the clean sample.
    The condition holds when no perturbed coefficient exceeds its clean
    counterpart in magnitude; denominators below ``ZERO_DENOMINATOR_TOL``
    only pass when the matching numerator vanishes as well.
    """

    numerators: np.ndarray
    denominators: np.ndarray
    ratios: np.ndarray
    zero_denominator: np.ndarray
    holds: bool


@dataclass(frozen=True, eq=False)
class AngleConditionReport:
    """Row-norm test sharpened by the noise/reference alignment.

    ``lhs[j]`` is the 2-norm of perturbation row j; ``noise_norms[j]``
    the matching sampling-noise row norm; ``cos_angles[i]`` the cosine
    between the i-th projected noise row and the reference direction;
    ``rhs[i, j] = noise_norms[j] * |cos_angles[i]|``.  The condition
    holds when every lhs is below every rhs row.  Rows whose cosine is
    undefined (zero-length operand) are flagged degenerate and fail.
    """

    lhs: np.ndarray
    noise_norms: np.ndarray
    cos_angles: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    holds: bool
    degenerate: bool


@dataclass(frozen=True, eq=False)
class ConditionReport:
    ratio: RatioConditionReport
    angle: AngleConditionReport
    norm_holds: bool


def ratio_condition(split, mode: str = "proof") -> RatioConditionReport:
    """Compare perturbed against clean approximated coefficients."""
    inv_block, ref = _operands(split, mode)
    numerators = inv_block @ split.perturbation_rows @ ref
    denominators = inv_block @ split.noise_rows @ ref
    zero_den = np.abs(denominators) < ZERO_DENOMINATOR_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(zero_den, np.nan, numerators / np.where(zero_den, 1.0, denominators))
    per_d = np.where(
        zero_den,
        np.abs(numerators) < ZERO_DENOMINATOR_TOL,
        np.abs(numerators) <= np.abs(denominators),
    )
    return RatioConditionReport(
        numerators=_readonly(numerators),
        denominators=_readonly(denominators),
        ratios=_readonly(ratios),
        zero_denominator=zero_den.copy(),
        holds=bool(np.all(per_d)),
    )


def angle_condition(split, mode: str = "proof") -> AngleConditionReport:
    """Row-norm comparison scaled by the noise/reference cosine."""
    inv_block, ref = _operands(split, mode)
    pert = split.perturbation_rows
    noise = split.noise_rows
    k = pert.shape[0]
    lhs = np.linalg.norm(pert, axis=1)
    noise_norms = np.linalg.norm(noise, axis=1)
    cos_angles = np.full(k, np.nan)
    degenerate = False
    projected = inv_block @ noise
    for i in range(k):
        try:
            cos_angles[i] = linalg.cosine_angle(projected[i, :], ref)
        except DegenerateDataError:
            degenerate = True
    rhs = np.abs(cos_angles)[:, None] * noise_norms[None, :]
    margins = rhs - lhs[None, :]
    holds = (not degenerate) and bool(np.all(margins >= 0.0))
    return AngleConditionReport(
        lhs=_readonly(lhs),
        noise_norms=_readonly(noise_norms),
        cos_angles=_readonly(cos_angles),
        rhs=_readonly(rhs),
        margins=_readonly(margins),
        holds=holds,
        degenerate=degenerate,
    )


def norm_condition(split) -> bool:
    """Do all perturbation rows fit under the sampling-noise row norms?"""
    lhs = np.linalg.norm(split.perturbation_rows, axis=1)
    rhs = np.linalg.norm(split.noise_rows, axis=1)
    return bool(np.all(lhs <= rhs))


def evaluate_conditions(split, mode: str = "proof") -> ConditionReport:
    return ConditionReport(
        ratio=ratio_condition(split, mode),
        angle=angle_condition(split, mode),
        norm_holds=norm_condition(split),
    )


def eigengap(values, index: int) -> float:
    """Distance from ``values[index]`` to its nearest spectral neighbour.

    ``values`` must be sorted in descending order; the gap above the
    top value and below the bottom value is infinite.
    """
    vals = linalg.as_vector(values, "values")
    k = vals.shape[0]
    if np.any(np.diff(vals) > 0):
        raise ValueError("eigenvalues must be sorted in descending order")
    index = int(index)
    if not 0 <= index < k:
        raise IndexError(f"index {index} out of range for {k} eigenvalues")
    above = vals[index - 1] - vals[index] if index > 0 else np.inf
    below = vals[index] - vals[index + 1] if index < k - 1 else np.inf
    return float(min(above, below))


@dataclass(frozen=True, eq=False)
class CutoffBounds:
    """Loading cut-off window for a set of block eigenpairs.

    Arrays are aligned with ``delta_set``.  ``lower`` must be cleared
    for the perturbation to stay invisible; the uppers must not be
    exceeded if the sampling noise is to stay visible, in three
    strengths (tight uses the angle geometry, necessary drops the
    cosine, loose replaces row norms with the Frobenius norm).  The
    window is feasible when the largest lower bound fits under the
    smallest tight upper bound; ``midpoint`` is then their average.
    """

    delta_set: tuple[int, ...]
    gaps: np.ndarray
    lower: np.ndarray
    upper_tight: np.ndarray
    upper_necessary: np.ndarray
    upper_loose: np.ndarray
    agg_lower: float
    agg_upper_tight: float
    agg_upper_necessary: float
    agg_upper_loose: float
    feasible: bool
    reason: str
    midpoint: float
    constant: float


def cutoff_bounds(
    split,
    delta_set=None,
    *,
    constant: float = DEFAULT_CUTOFF_CONSTANT,
    mode: str = "proof",
    cov_split: PerturbationSplit | None = None,
) -> CutoffBounds:
    """Bound the loading cut-offs compatible with a perturbation split.

    For a ``PerturbationSplit`` the spectrum of the joint covariance is
    used; for a ``CorrelationSplit`` the joint correlation spectrum.
    ``mode`` only matters for correlation splits: ``proof`` keeps every
    operand on the correlation scale, ``literal`` borrows the angle
    geometry from the covariance scale and then requires ``cov_split``.

    ``delta_set`` defaults to the joint eigenpairs carried by the
    block.  ``constant`` scales every bound; see
    ``DEFAULT_CUTOFF_CONSTANT`` and ``DAVIS_KAHAN_CONSTANT``.
    """
    constant = float(constant)
    if not np.isfinite(constant) or constant <= 0:
        raise ValueError(f"constant must be positive and finite, got {constant!r}")
    pop = split.population
    is_corr = isinstance(split, CorrelationSplit)
    if is_corr:
        values = pop.eigen_rho_y.values
        basis = "correlation"
        if mode == "literal":
            if cov_split is None:
                raise ValueError("literal mode needs the covariance split for its angles")
            angle = angle_condition(cov_split, "proof")
        else:
            angle = angle_condition(split, mode)
    else:
        values = pop.eigen_y.values
        basis = "covariance"
        angle = angle_condition(split, mode)
    if delta_set is None:
        delta_set = pop.block_eigen_indices(basis)
    delta_set = tuple(sorted(int(j) for j in delta_set))
    if not delta_set:
        raise ValueError("delta_set must not be empty")
    if delta_set[0] < 0 or delta_set[-1] >= values.shape[0]:
        raise IndexError(f"delta_set out of range for {values.shape[0]} eigenvalues")
    gaps = np.array([eigengap(values, j) for j in delta_set])
    pert_fro = linalg.frobenius_norm(split.perturbation_joint)
    noise_fro = linalg.frobenius_norm(
        split.h_rho_y if is_corr else split.h_y
    )
    if angle.degenerate:
        tight_scale = np.nan
    else:
        tight_scale = float(np.min(np.abs(angle.cos_angles)) * np.min(angle.noise_norms))
    necessary_scale = float(np.min(angle.noise_norms))
    with np.errstate(divide="ignore"):
        inv_gaps = np.where(gaps > 0.0, 1.0 / gaps, np.inf)
    lower = constant * pert_fro * inv_gaps
    upper_tight = constant * tight_scale * inv_gaps
    upper_necessary = constant * necessary_scale * inv_gaps
    upper_loose = constant * noise_fro * inv_gaps
    agg_lower = float(np.max(lower))
    agg_tight = float(np.min(upper_tight)) if not angle.degenerate else np.nan
    agg_necessary = float(np.min(upper_necessary))
    agg_loose = float(np.min(upper_loose))
    if angle.degenerate:
        feasible, reason = False, "degenerate angle geometry"
    elif np.any(gaps <= 0.0):
        worst = delta_set[int(np.argmin(gaps))]
        feasible, reason = False, f"zero eigengap at eigenvalue index {worst}"
    elif agg_lower <= agg_tight:
        feasible, reason = True, ""
    else:
        feasible, reason = False, "perturbation floor exceeds the noise ceiling"
    midpoint = 0.5 * (agg_lower + agg_tight) if feasible else np.nan
    return CutoffBounds(
        delta_set=delta_set,
        gaps=_readonly(gaps),
        lower=_readonly(lower),
        upper_tight=_readonly(upper_tight),
        upper_necessary=_readonly(upper_necessary),
        upper_loose=_readonly(upper_loose),
        agg_lower=agg_lower,
        agg_upper_tight=agg_tight,
        agg_upper_necessary=agg_necessary,
        agg_upper_loose=agg_loose,
        feasible=feasible,
        reason=reason,
        midpoint=float(midpoint),
        constant=constant,
    )


@dataclass(frozen=True, eq=False)
class ApproxCoefficients:
    """First-order regression coefficients on the block, both samples."""

    base: np.ndarray
    perturbed: np.ndarray


def approx_coefficients(split, mode: str = "proof") -> ApproxCoefficients:
    """Coefficients on the block via the starred first-order expansion.

    These are exactly the denominators (clean sample) and numerators
    (perturbed sample) of the ratio condition.
    """
    report = ratio_condition(split, mode)
    return ApproxCoefficients(base=report.denominators, perturbed=report.numerators)


def approx_coefficients_dense(split: PerturbationSplit) -> ApproxCoefficients:
    """Coefficients on the block via the dense one-term inverse expansion.

    Expands each sample's full inverse as inv(sigma) minus
    inv(sigma) @ deviation @ inv(sigma) and applies it to the sample
    cov-vector, keeping only the block coordinates.  Agrees with the
    starred path exactly when the cov-vector noise vanishes and to
    first order otherwise.
    """
    pop = split.population
    d = list(pop.d_set)
    inv_sigma = linalg.solve_spd(pop.sigma, np.eye(pop.m))

    def one(noise: np.ndarray, cov_hat: np.ndarray) -> np.ndarray:
        approx_inv = inv_sigma - inv_sigma @ noise @ inv_sigma
        return (approx_inv @ cov_hat)[d]

    base = one(split.h, pop.cov + split.h_cov)
    total = pop.e + split.e_tilde
    perturbed = one(total, pop.cov + pop.e_cov + split.e_tilde_cov)
    return ApproxCoefficients(base=_readonly(base), perturbed=_readonly(perturbed))


def convergence_rate_estimate(ns, values) -> float:
    """Log-log slope of ``values`` against ``ns`` by least squares."""
    ns_arr = linalg.as_vector(ns, "ns")
    vals = linalg.as_vector(values, "values")
    if ns_arr.shape != vals.shape:
        raise ValueError("ns and values must have matching lengths")
    if ns_arr.shape[0] < 2:
        raise ValueError("need at least two points to estimate a rate")
    if np.any(ns_arr <= 0) or np.any(vals <= 0):
        raise ValueError("rate estimation needs strictly positive inputs")
    return float(np.polyfit(np.log(ns_arr), np.log(vals), 1)[0])
