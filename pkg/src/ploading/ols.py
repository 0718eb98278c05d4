"""Ordinary least squares with t-based variable discarding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import linalg
from .exceptions import InsufficientDataError, NotCenteredError


@dataclass(frozen=True, eq=False)
class OlsFit:
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    sigma2: float
    df: int


def student_t_sf(t, df):
    """Two-sided tail P(|T| > |t|) of Student's t with ``df`` degrees.

    Evaluated through the regularized incomplete beta function; even in
    t, so the sign of ``t`` is irrelevant.  Accepts scalars or arrays.
    Infinite ``t`` gives 0, ``t = 0`` gives 1.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    df_f = float(df)
    if df_f <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        x = df_f / (df_f + t_arr**2)
    out = special.betainc(df_f / 2.0, 0.5, x)
    out = np.where(np.isinf(t_arr), 0.0, out)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


def ols_fit(x, y) -> OlsFit:
    """Least squares on centred data via the normal equations.

    Both ``x`` and ``y`` must already be mean-centred; no intercept is
    fitted.  Degrees of freedom are n - m.  A coefficient with zero
    standard error gets t = 0 when the coefficient is itself zero and
    a signed infinity otherwise.
    """
    x = linalg.as_matrix(x, "x")
    y_vec = linalg.as_vector(y, "y")
    n, m = x.shape
    if y_vec.shape[0] != n:
        raise ValueError(f"x has {n} rows but y has {y_vec.shape[0]}")
    if n <= m:
        raise InsufficientDataError(f"need more rows than regressors, got {n} rows for {m}")
    tol_x = linalg.center_tolerance(x)
    col_means = x.mean(axis=0)
    worst = int(np.argmax(np.abs(col_means)))
    if abs(col_means[worst]) > tol_x:
        raise NotCenteredError(
            f"column {worst} has mean {col_means[worst]:.3e}; centre the data first"
        )
    tol_y = linalg.center_tolerance(y_vec.reshape(-1, 1))
    if abs(float(y_vec.mean())) > tol_y:
        raise NotCenteredError(
            f"response has mean {float(y_vec.mean()):.3e}; centre the data first"
        )
    gram = linalg.symmetrize(x.T @ x)
    beta = linalg.solve_spd(gram, x.T @ y_vec)
    residuals = y_vec - x @ beta
    df = n - m
    sigma2 = float(residuals @ residuals) / df
    gram_inv = linalg.solve_spd(gram, np.eye(m))
    variances = sigma2 * np.diag(gram_inv)
    std_errors = np.sqrt(np.maximum(variances, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(
            std_errors > 0,
            beta / np.where(std_errors > 0, std_errors, 1.0),
            np.where(beta == 0.0, 0.0, np.sign(beta) * np.inf),
        )
    p_values = np.asarray(student_t_sf(t_stats, df))
    for arr in (beta, std_errors, t_stats, p_values, residuals):
        arr.flags.writeable = False
    return OlsFit(
        coefficients=beta,
        std_errors=std_errors,
        t_stats=t_stats,
        p_values=p_values,
        residuals=residuals,
        sigma2=sigma2,
        df=df,
    )


def discard_by_ols(fit: OlsFit, alpha: float = 0.05) -> tuple[int, ...]:
    """Regressors whose two-sided p-value strictly exceeds ``alpha``.

    Boundary cases (p == alpha) count as significant and are kept.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return tuple(int(i) for i in np.nonzero(fit.p_values > alpha)[0])


class OrdinaryLeastSquares(BaseEstimator, RegressorMixin):
    """Least-squares regression with p-value based variable flagging.

    Centres predictors and response internally, so an intercept is
    implicit; predictions add the training means back.

    Attributes
    ----------
    coef_ : ndarray, shape (n_features_in_,)
    std_errors_ : ndarray
    t_stats_ : ndarray
    p_values_ : ndarray
    discard_mask_ : ndarray of bool
        True where the two-sided p-value exceeds ``alpha``.
    """

    def __init__(self, alpha: float = 0.05):
        self.alpha = alpha

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = float(np.mean(y))
        fit = ols_fit(X - self.x_mean_, y - self.y_mean_)
        self.n_features_in_ = X.shape[1]
        self.fit_ = fit
        self.coef_ = fit.coefficients
        self.intercept_ = self.y_mean_ - float(self.x_mean_ @ fit.coefficients)
        self.std_errors_ = fit.std_errors
        self.t_stats_ = fit.t_stats
        self.p_values_ = fit.p_values
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(discard_by_ols(fit, self.alpha))] = True
        self.discard_mask_ = mask
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but fit saw {self.n_features_in_}"
            )
        return X @ self.coef_ + self.intercept_
