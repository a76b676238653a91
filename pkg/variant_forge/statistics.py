"""
Confidence intervals and least-squares fits over sweep results.
"""

import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.linalg import lstsq

from .errors import StatisticsError

logger = logging.getLogger(__name__)

CI_LEVEL = 0.90
EXPANSIONS = ("linear", "quadratic")


@dataclass(frozen=True)
class CIResult:
    mean: float
    half_width: float
    level: float
    n: int

    @property
    def lo(self):
        return self.mean - self.half_width

    @property
    def hi(self):
        return self.mean + self.half_width


def ci90(scores, level=CI_LEVEL):
    """
    Student-t interval on the mean: mean +- t_{(1+level)/2, n-1} * sd / sqrt(n).
    """

    values = np.asarray(list(scores), dtype=np.float64)
    n = len(values)
    if n < 2:
        raise StatisticsError(f"a confidence interval needs at least 2 values, got {n}")
    if not np.all(np.isfinite(values)):
        raise StatisticsError("scores must be finite")

    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        return CIResult(mean, 0.0, level, n)
    t_quantile = stats.t.ppf(0.5 + level / 2.0, df=n - 1)
    return CIResult(mean, float(t_quantile * sd / np.sqrt(n)), level, n)


@dataclass(frozen=True)
class RegressionFit:
    """
    Coefficients are for the standardized design; coefficients[0] is the intercept.
    """

    feature_names: tuple
    coefficients: np.ndarray
    r_squared: float
    expand: str = "linear"
    n: int = 0
    rank_deficient: bool = False
    constant_features: tuple = field(default=())

    def to_dict(self):
        return {
            "expand": self.expand,
            "n": self.n,
            "feature_names": list(self.feature_names),
            "coefficients": [float(c) for c in self.coefficients],
            "r_squared": float(self.r_squared),
            "rank_deficient": self.rank_deficient,
            "constant_features": list(self.constant_features),
        }


def standardize(X):
    """Zero mean, unit variance per column; constant columns become zero"""

    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    constant = sd == 0.0
    return (X - mean) / np.where(constant, 1.0, sd), constant


def expand_features(Z, names, expand="linear", squares_only=False):
    """
    linear: the columns themselves. quadratic: the columns, their squares and
    (unless squares_only) all pairwise products.
    """

    if expand not in EXPANSIONS:
        raise StatisticsError(f"unknown expansion {expand!r}; expected one of {EXPANSIONS}")
    columns = [Z[:, j] for j in range(Z.shape[1])]
    out_names = list(names)
    if expand == "quadratic":
        for j, name in enumerate(names):
            columns.append(Z[:, j] ** 2)
            out_names.append(f"{name}^2")
        if not squares_only:
            for i, j in itertools.combinations(range(len(names)), 2):
                columns.append(Z[:, i] * Z[:, j])
                out_names.append(f"{names[i]}*{names[j]}")
    return np.column_stack(columns), tuple(out_names)


def ols_fit(X, y, expand="linear", feature_names=None, squares_only=False):
    """
    Least squares with intercept on standardized features; R^2 on the
    training data.

    A rank-deficient design still gets the minimum-norm solution, flagged on
    the result and reported through warnings.warn.

    :param X:               observation matrix (rows are observations)
    :param y:               response (scores)
    :param expand:          "linear" or "quadratic"
    :param feature_names:   column names, default x0, x1, ...
    :param squares_only:    quadratic expansion without pairwise products
    """

    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise StatisticsError(f"{X.shape[0]} observations but {len(y)} responses")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise StatisticsError("observations must be finite")
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise StatisticsError(f"{len(names)} feature names for {X.shape[1]} columns")

    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise StatisticsError("the response has zero variance; R^2 is undefined")

    Z, constant = standardize(X)
    design, out_names = expand_features(Z, names, expand, squares_only)
    design = np.column_stack([np.ones(len(y)), design])
    if design.shape[0] < design.shape[1]:
        raise StatisticsError(
            f"{design.shape[0]} observations for {design.shape[1]} coefficients")

    # constant features contribute all-zero columns; they are left out of the solve
    active = np.any(design != 0.0, axis=0)
    active[0] = True
    coefficients = np.zeros(design.shape[1])
    solution, _, rank, _ = lstsq(design[:, active], y, lapack_driver="gelsd")
    coefficients[active] = solution

    rank_deficient = rank < int(active.sum())
    if rank_deficient:
        message = f"rank-deficient design ({rank} of {int(active.sum())} columns); minimum-norm solution"
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=2)

    ssr = float(np.sum((y - design @ coefficients) ** 2))
    r_squared = 1.0 - ssr / sst
    constant_names = tuple(name for name, flag in zip(names, constant) if flag)
    logger.info("%s fit on %d observations: R^2 = %.4f", expand, len(y), r_squared)
    return RegressionFit(("intercept",) + out_names, coefficients, r_squared, expand,
                         len(y), rank_deficient, constant_names)
