"""Principal loading analysis: block detection and explained variance.

A block of variables D is discardable at cut-off tau when there are
|D| eigenvectors whose loadings on every variable outside D are at
most tau in magnitude.  Candidate blocks are searched as connected
components of the bipartite variable/eigenvector support graph, which
recovers exact blocks at tau = 0 and never reports a block that fails
the threshold test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import linalg
from .exceptions import (
    BlockMismatchError,
    DegenerateDataError,
    InsufficientDataError,
)

# LAPACK leaves O(1e-12..1e-10) cross-block residue in eigenvectors of
# exactly decoupled blocks; loadings at or below this floor are treated
# as structural zeros so that tau = 0 still recovers exact blocks.
LOADING_FLOOR = 1e-8

# A centred column whose variance is indistinguishable from centring
# round-off (16 * n * (eps * scale)^2) counts as constant.
_EPS = np.finfo(np.float64).eps

VALID_BASES = ("covariance", "correlation")


@dataclass(frozen=True, eq=False)
class DiscardCandidate:
    """One variable block D paired with its eigenpair set."""

    variables: tuple[int, ...]
    eigen_indices: tuple[int, ...]
    max_cross_loading: float
    explained_exact: float
    explained_approx: float


@dataclass(frozen=True, eq=False)
class PlaReport:
    basis: str
    tau: float
    candidates: tuple[DiscardCandidate, ...]
    eigen: linalg.EigenSystem
    columns: tuple[str, ...] | None = None
    zero_variance: tuple[int, ...] = ()

    def discard_set(self, exclude: int | None = None) -> tuple[int, ...]:
        """Union of candidate blocks, skipping blocks containing ``exclude``."""
        out: set[int] = set()
        for cand in self.candidates:
            if exclude is not None and exclude in cand.variables:
                continue
            out.update(cand.variables)
        return tuple(sorted(out))


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not np.isfinite(tau) or not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau!r}")
    return tau


def _check_block(m: int, variables) -> tuple[int, ...]:
    block = tuple(sorted(int(i) for i in variables))
    if len(set(block)) != len(block):
        raise ValueError("block contains duplicate indices")
    if not block or len(block) >= m:
        raise ValueError(f"block must be a non-empty proper subset of {m} variables")
    if block[0] < 0 or block[-1] >= m:
        raise ValueError(f"block indices out of range for {m} variables")
    return block


def find_discardable_blocks(
    eigen: linalg.EigenSystem, tau: float
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All candidate blocks at cut-off ``tau``.

    Builds the bipartite support graph with an edge between variable i
    and eigenpair j whenever ``|v_j[i]| > max(tau, LOADING_FLOOR)`` and
    returns each connected component that pairs equally many variables
    and eigenpairs and is a proper subset, ordered by smallest member.
    """
    tau = _check_tau(tau)
    thr = max(tau, LOADING_FLOOR)
    vectors = eigen.vectors
    m = eigen.m
    strong = np.abs(vectors) > thr
    var_seen = np.zeros(m, dtype=bool)
    eig_seen = np.zeros(m, dtype=bool)
    blocks: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for start in range(m):
        if var_seen[start]:
            continue
        var_seen[start] = True
        comp_vars = [start]
        comp_eigs: list[int] = []
        stack_vars = [start]
        stack_eigs: list[int] = []
        while stack_vars or stack_eigs:
            if stack_vars:
                i = stack_vars.pop()
                for j in np.nonzero(strong[i, :])[0]:
                    if not eig_seen[j]:
                        eig_seen[j] = True
                        comp_eigs.append(int(j))
                        stack_eigs.append(int(j))
            else:
                j = stack_eigs.pop()
                for i in np.nonzero(strong[:, j])[0]:
                    if not var_seen[i]:
                        var_seen[i] = True
                        comp_vars.append(int(i))
                        stack_vars.append(int(i))
        if len(comp_vars) == len(comp_eigs) and len(comp_vars) < m:
            blocks.append((tuple(sorted(comp_vars)), tuple(sorted(comp_eigs))))
    blocks.sort(key=lambda pair: pair[0][0])
    return blocks


def _qualifying_eigenpairs(eigen: linalg.EigenSystem, block: tuple[int, ...], thr: float) -> tuple[int, ...]:
    outside = np.setdiff1d(np.arange(eigen.m), np.asarray(block, dtype=int))
    off = np.abs(eigen.vectors[outside, :]).max(axis=0)
    return tuple(int(j) for j in np.nonzero(off <= thr)[0])


def is_discardable(eigen: linalg.EigenSystem, variables, tau: float) -> bool:
    """Direct threshold test: do at least |D| eigenpairs load only on D?

    Unlike the component search this is monotone in ``tau``: a block
    that passes at some cut-off passes at every larger cut-off.
    """
    tau = _check_tau(tau)
    block = _check_block(eigen.m, variables)
    thr = max(tau, LOADING_FLOOR)
    return len(_qualifying_eigenpairs(eigen, block, thr)) >= len(block)


def match_eigen_to_block(eigen: linalg.EigenSystem, variables, tau: float) -> tuple[int, ...]:
    """The eigenpair set whose off-block loadings are all within ``tau``.

    Raises
    ------
    BlockMismatchError
        If the number of qualifying eigenpairs differs from |D|; the
        exception carries the indices that did qualify.
    """
    tau = _check_tau(tau)
    block = _check_block(eigen.m, variables)
    thr = max(tau, LOADING_FLOOR)
    delta = _qualifying_eigenpairs(eigen, block, thr)
    if len(delta) != len(block):
        raise BlockMismatchError(
            f"block of {len(block)} variables matched {len(delta)} eigenpairs at tau={tau}",
            found=delta,
        )
    return delta


def explained_variance(
    eigen: linalg.EigenSystem, variables, eigen_indices
) -> tuple[float, float]:
    """Exact and approximated share of total variance carried by a block.

    The exact share weighs every eigenvalue by the squared loadings of
    the block's variables; the approximation keeps only the matched
    eigenvalues.  Requires a PSD spectrum with positive total variance.
    """
    block = _check_block(eigen.m, variables)
    delta = tuple(sorted(int(j) for j in eigen_indices))
    if delta and (delta[0] < 0 or delta[-1] >= eigen.m):
        raise ValueError(f"eigen indices out of range for {eigen.m} eigenpairs")
    values = eigen.values
    floor = -1e-10 * max(1.0, float(np.max(np.abs(values))))
    if np.any(values < floor):
        raise ValueError("explained variance needs a PSD spectrum")
    total = float(values.sum())
    if total <= 0.0:
        raise DegenerateDataError("zero total variance")
    mass = (eigen.vectors[list(block), :] ** 2).sum(axis=0)
    exact = float(values @ mass) / total
    approx = float(values[list(delta)].sum()) / total
    return exact, approx


def _zero_variance_columns(data: np.ndarray, cov: np.ndarray) -> tuple[int, ...]:
    scale = np.max(np.abs(data), axis=0)
    threshold = 16.0 * data.shape[0] * (_EPS * scale) ** 2
    return tuple(int(i) for i in np.nonzero(np.diag(cov) <= threshold)[0])


def run_pla(data, basis: str = "covariance", tau: float = 0.0, columns=None) -> PlaReport:
    """Full pipeline: centre, estimate, decompose, search blocks.

    Parameters
    ----------
    data : array-like, shape (n, m)
        Raw observations; centring is applied here.
    basis : {"covariance", "correlation"}
        Matrix whose eigenvectors drive the analysis.
    tau : float in [0, 1)
        Loading cut-off.
    columns : sequence of str, optional
        Names carried through to the report.
    """
    if basis not in VALID_BASES:
        raise ValueError(f"basis must be one of {VALID_BASES}, got {basis!r}")
    tau = _check_tau(tau)
    arr = linalg.as_matrix(data, "data")
    n, m = arr.shape
    if m < 2:
        raise DegenerateDataError("analysis needs at least 2 variables")
    if n <= m:
        raise InsufficientDataError(f"need more rows than variables, got {n} rows for {m} variables")
    if columns is not None:
        columns = tuple(str(c) for c in columns)
        if len(columns) != m:
            raise ValueError(f"got {len(columns)} column names for {m} columns")
    centred = linalg.mean_center(arr)
    cov = linalg.sample_covariance(centred)
    zero_var = _zero_variance_columns(arr, cov)
    if len(zero_var) == m:
        raise DegenerateDataError("zero total variance")
    if basis == "correlation":
        if zero_var:
            names = [columns[i] if columns else str(i) for i in zero_var]
            raise DegenerateDataError(
                f"correlation basis undefined for constant column(s): {', '.join(names)}"
            )
        matrix = linalg.correlation_from_covariance(cov)
    else:
        matrix = cov
    eigen = linalg.eigh(matrix)
    outside_abs = np.abs(eigen.vectors)
    candidates = []
    for block, delta in find_discardable_blocks(eigen, tau):
        exact, approx = explained_variance(eigen, block, delta)
        dc = np.setdiff1d(np.arange(m), np.asarray(block, dtype=int))
        cross = float(outside_abs[np.ix_(dc, list(delta))].max()) if len(delta) else 0.0
        candidates.append(
            DiscardCandidate(
                variables=block,
                eigen_indices=delta,
                max_cross_loading=cross,
                explained_exact=exact,
                explained_approx=approx,
            )
        )
    return PlaReport(
        basis=basis,
        tau=tau,
        candidates=tuple(candidates),
        eigen=eigen,
        columns=columns,
        zero_variance=zero_var,
    )


class PrincipalLoadingAnalysis(BaseEstimator, TransformerMixin):
    """Feature-block pruning by principal loading analysis.

    Fitting runs the PLA pipeline on the training columns; transform
    drops every column belonging to a selected candidate block.  By
    default all detected blocks are dropped; set
    ``max_explained_variance`` to only drop blocks whose exact
    explained-variance share is at or below the threshold.

    Attributes
    ----------
    report_ : PlaReport
        Full analysis of the training data.
    candidates_ : tuple of DiscardCandidate
    discard_indices_ : tuple of int
        Columns removed by transform.
    support_mask_ : ndarray of bool, shape (n_features_in_,)
        True for columns that survive.
    """

    def __init__(self, tau: float = 0.1, basis: str = "covariance",
                 max_explained_variance: float | None = None):
        self.tau = tau
        self.basis = basis
        self.max_explained_variance = max_explained_variance

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        report = run_pla(X, basis=self.basis, tau=self.tau)
        limit = self.max_explained_variance
        selected = [
            c for c in report.candidates
            if limit is None or c.explained_exact <= limit
        ]
        drop = sorted({i for c in selected for i in c.variables})
        if len(drop) == X.shape[1]:
            raise DegenerateDataError(
                "every column would be discarded; tighten tau or set max_explained_variance"
            )
        mask = np.ones(X.shape[1], dtype=bool)
        mask[drop] = False
        self.n_features_in_ = X.shape[1]
        self.report_ = report
        self.candidates_ = report.candidates
        self.eigenvalues_ = report.eigen.values
        self.loadings_ = report.eigen.vectors
        self.discard_indices_ = tuple(drop)
        self.support_mask_ = mask
        return self

    def transform(self, X):
        check_is_fitted(self, "support_mask_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but fit saw {self.n_features_in_}"
            )
        return X[:, self.support_mask_]

    def get_support(self, indices: bool = False):
        check_is_fitted(self, "support_mask_")
        if indices:
            return np.nonzero(self.support_mask_)[0]
        return self.support_mask_.copy()
