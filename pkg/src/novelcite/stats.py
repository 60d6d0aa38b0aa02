"""Hit-paper labelling, percentile curves, polynomial logit fits and mutual information."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DegenerateError, ValidationError

logger = logging.getLogger(__name__)

ANALYSIS_VARIABLES = [
    "cit_mean", "cit_p90", "jr_mean", "jr_p90", "sc_mean", "sc_p90", "ncit_pct",
    "acit_mean", "ajr_mean", "asc_mean", "cit_alt_mean", "jr_alt_mean", "sc_alt_mean",
]
DEFAULT_DEGREES = {
    "cit_alt_mean": 2, "jr_alt_mean": 2, "sc_alt_mean": 2,
    "acit_mean": 2, "ajr_mean": 3, "asc_mean": 3,
}
# entry order: citation, journal, subject category
DEFAULT_HIERARCHIES = [
    ["cit_alt_mean", "jr_alt_mean", "sc_alt_mean"],
    ["acit_mean", "ajr_mean", "asc_mean"],
]
MAX_ITER = 100
TOL = 1e-8


def _series(values, name=None) -> pd.Series:
    if isinstance(values, pd.Series):
        s = values.copy()
    else:
        s = pd.Series(dict(values), dtype=float)
    if name is not None:
        s.name = name
    return s


@dataclass
class HitLabels:
    labels: pd.Series
    threshold: int
    realized_rate: float
    degenerate_ties: bool = False

    def __len__(self):
        return len(self.labels)


def hit_labels(future_citations, top_frac: float = 0.05) -> HitLabels:
    """Label the top ``top_frac`` of papers by citation count.

    The threshold is the smallest count ``v`` with ``share(count >= v) <=
    top_frac``; papers tied at ``v`` are all in. If even the maximum count
    is shared by more than ``top_frac`` of papers, the maximum is used and
    ``degenerate_ties`` is set.
    """
    if not 0 < top_frac < 1:
        raise ValidationError("top_frac must lie in (0, 1)")
    s = _series(future_citations)
    if s.empty:
        raise DegenerateError("no papers to label")
    counts = s.to_numpy(dtype=np.int64)
    values, freq = np.unique(counts, return_counts=True)
    if len(values) == 1:
        raise DegenerateError("all papers have the same citation count; hit labels undefined")
    n = len(counts)
    share_at_least = np.cumsum(freq[::-1])[::-1] / n
    ok = np.flatnonzero(share_at_least <= top_frac)
    degenerate = len(ok) == 0
    v = int(values[-1] if degenerate else values[ok[0]])
    if degenerate:
        logger.warning("ties at the maximum citation count exceed top_frac=%g", top_frac)
    labels = pd.Series((counts >= v).astype(np.int8), index=s.index, name="hit")
    return HitLabels(labels, v, float(labels.mean()), degenerate)


@dataclass
class PercentileSeries:
    name: str
    percentiles: pd.Series

    def __len__(self):
        return len(self.percentiles)

    def scaled(self) -> pd.Series:
        return self.percentiles / 100.0


def percentile_rank(values, name: str = "x") -> PercentileSeries:
    """Percentile ``ceil(100 r / N)`` with ``r`` the number of values <= x.

    Missing values are dropped before ranking.
    """
    s = _series(values).dropna()
    v = s.to_numpy(dtype=np.float64)
    n = len(v)
    r = np.searchsorted(np.sort(v), v, side="right")
    pct = (100 * r + n - 1) // n if n else r
    return PercentileSeries(name, pd.Series(pct.astype(np.int64), index=s.index, name=name))


def _align(series: PercentileSeries, labels: HitLabels):
    idx = series.percentiles.index.intersection(labels.labels.index, sort=False)
    return series.percentiles.loc[idx], labels.labels.loc[idx]


def hit_curve(series: PercentileSeries, labels: HitLabels) -> pd.DataFrame:
    """Share of hits and bin size per occupied percentile."""
    x, y = _align(series, labels)
    g = pd.DataFrame({"percentile": x.to_numpy(), "hit": y.to_numpy()}).groupby("percentile")["hit"]
    out = pd.DataFrame({"probability": g.mean(), "n": g.size()}).reset_index()
    out.insert(0, "variable", series.name)
    return out


@dataclass
class LogisticFit:
    variables: list[tuple[str, int]]
    coefficients: np.ndarray
    null_deviance: float
    residual_deviance: float
    iterations: int
    converged: bool
    separated: bool = False
    n: int = 0
    fitted: np.ndarray = field(default=None, repr=False)

    @property
    def n_params(self) -> int:
        return len(self.coefficients)

    def report(self) -> dict:
        return {
            "variables": [v for v, _ in self.variables],
            "degrees": [d for _, d in self.variables],
            "coefficients": [float(c) for c in self.coefficients],
            "null_deviance": float(self.null_deviance),
            "residual_deviance": float(self.residual_deviance),
            "iterations": self.iterations,
            "converged": self.converged,
            "separated": self.separated,
            "n": self.n,
        }


def binomial_deviance(y: np.ndarray, eta: np.ndarray) -> float:
    """``-2 log L`` of 0/1 outcomes under logits ``eta``."""
    return float(2.0 * np.sum(y * np.logaddexp(0.0, -eta) + (1.0 - y) * np.logaddexp(0.0, eta)))


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -eta))


def null_deviance(y) -> float:
    y = np.asarray(y, dtype=np.float64)
    p = y.mean()
    if p in (0.0, 1.0):
        return 0.0
    return -2.0 * len(y) * (p * math.log(p) + (1 - p) * math.log(1 - p))


def irls(X: np.ndarray, y: np.ndarray, beta0: np.ndarray | None = None,
         max_iter: int = MAX_ITER, tol: float = TOL):
    """Maximum-likelihood logistic coefficients by IRLS with step halving.

    Returns ``(beta, deviance, iterations, converged, separated)``. Rank
    deficient designs get the minimum-norm solution of each weighted
    least-squares step.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    beta = np.zeros(X.shape[1]) if beta0 is None else np.asarray(beta0, dtype=np.float64).copy()
    if beta0 is None and X.shape[1]:
        p = np.clip(y.mean(), 1e-12, 1 - 1e-12)
        # least-squares start matching a constant logit
        beta = np.linalg.lstsq(X, np.full(len(y), math.log(p / (1 - p))), rcond=None)[0]
    eta = X @ beta
    dev = binomial_deviance(y, eta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(eta)
        w = np.clip(p * (1.0 - p), 1e-12, None)
        z = eta + (y - p) / w
        sw = np.sqrt(w)
        full = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)[0]
        new = full
        new_eta = X @ new
        new_dev = binomial_deviance(y, new_eta)
        step = 1.0
        while new_dev > dev and step > 1e-6:
            step /= 2
            new = beta + step * (full - beta)
            new_eta = X @ new
            new_dev = binomial_deviance(y, new_eta)
        if new_dev > dev:
            # no descent along the Newton direction: numerically at the optimum
            converged = True
            break
        change = dev - new_dev
        beta, eta, dev = new, new_eta, new_dev
        if change < tol:
            converged = True
            break
    separated = bool(np.max(np.abs(eta), initial=0.0) > 30 or np.max(np.abs(beta), initial=0.0) > 1e6)
    return beta, dev, it, converged, separated


def poly_columns(x: np.ndarray, degree: int) -> np.ndarray:
    return np.column_stack([x ** k for k in range(1, degree + 1)]) if degree else np.empty((len(x), 0))


def _xy(x, y):
    if isinstance(x, PercentileSeries):
        if not isinstance(y, HitLabels):
            raise TypeError("percentile series must be paired with HitLabels")
        xs, ys = _align(x, y)
        return x.name, xs.to_numpy(dtype=np.float64) / 100.0, ys.to_numpy(dtype=np.float64)
    if isinstance(y, HitLabels):
        y = y.labels
    return "x", np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)


def _check_classes(y):
    if len(y) == 0 or y.min() == y.max():
        raise DegenerateError("both classes must be present to fit a logit")


def fit_logistic_poly(x, y, degree: int) -> LogisticFit:
    """Polynomial logit ``B0 + B1 x + ... + Bk x^k``.

    ``x`` is a :class:`PercentileSeries` (mapped to [0, 1]) paired with
    :class:`HitLabels`, or plain arrays already on the unit interval.
    """
    if not 0 <= degree <= 4:
        raise ValidationError("degree must be between 0 and 4")
    name, xv, yv = _xy(x, y)
    _check_classes(yv)
    if len(np.unique(xv)) < degree + 2 and degree > 0:
        raise DegenerateError(f"{name}: need at least {degree + 2} distinct x values for degree {degree}")
    X = np.column_stack([np.ones(len(xv)), poly_columns(xv, degree)])
    beta, dev, it, conv, sep = irls(X, yv)
    if not conv:
        logger.warning("%s: logit fit did not converge in %d iterations", name, it)
    eta = X @ beta
    return LogisticFit([(name, degree)], beta, null_deviance(yv), dev, it, conv, sep, len(yv),
                       _sigmoid(eta))


def hierarchical_fit(ordered_vars: Sequence[tuple[PercentileSeries, int]], y: HitLabels) -> list[LogisticFit]:
    """Nested fits: intercept only, then each variable's polynomial added in turn.

    Papers missing any variable are dropped from every step, and each step
    starts from the previous optimum so deviance cannot increase.
    """
    idx = y.labels.index
    for series, _ in ordered_vars:
        idx = idx.intersection(series.percentiles.index, sort=False)
    yv = y.labels.loc[idx].to_numpy(dtype=np.float64)
    _check_classes(yv)
    X = np.ones((len(idx), 1))
    beta, dev, it, conv, sep = irls(X, yv)
    fits = [LogisticFit([], beta, null_deviance(yv), dev, it, conv, sep, len(yv), _sigmoid(X @ beta))]
    used = []
    for series, degree in ordered_vars:
        xv = series.percentiles.loc[idx].to_numpy(dtype=np.float64) / 100.0
        X = np.column_stack([X, poly_columns(xv, degree)])
        used.append((series.name, degree))
        start = np.concatenate([beta, np.zeros(degree)])
        beta, dev, it, conv, sep = irls(X, yv, start)
        fits.append(LogisticFit(list(used), beta, fits[0].null_deviance, dev, it, conv, sep, len(yv),
                                _sigmoid(X @ beta)))
    return fits


@dataclass
class MIResult:
    variable: str
    mi_bits: float


def mutual_information_discrete(x, y) -> float:
    """Plug-in mutual information (bits) of two discrete samples."""
    x = np.asarray(x)
    y = np.asarray(y)
    if len(x) != len(y):
        raise ValueError("samples differ in length")
    if len(x) == 0:
        return 0.0
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    n = len(x)
    joint = np.zeros((xi.max() + 1, yi.max() + 1), dtype=np.int64)
    np.add.at(joint, (xi, yi), 1)
    nx = joint.sum(axis=1, keepdims=True)
    ny = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    # integer ratio n_xy * n / (n_x * n_y) is exactly 1 for independent cells
    ratio = (joint * n)[nz] / (nx * ny)[nz]
    mi = float(np.sum(joint[nz] / n * np.log2(ratio)))
    return max(mi, 0.0)


def mutual_information(labels: HitLabels, series: PercentileSeries) -> MIResult:
    x, y = _align(series, labels)
    return MIResult(series.name, mutual_information_discrete(x.to_numpy(), y.to_numpy()))


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


@dataclass
class AnalysisResult:
    labels: HitLabels
    curves: pd.DataFrame
    bivariate: dict[str, LogisticFit | str]
    hierarchical: list[list[LogisticFit]]
    mi: dict[str, MIResult]

    def report(self) -> dict:
        biv = []
        for var, fit in self.bivariate.items():
            entry = {"variable": var}
            if isinstance(fit, LogisticFit):
                entry.update(fit.report())
            else:
                entry["error"] = fit
            entry["mi_bits"] = self.mi[var].mi_bits if var in self.mi else None
            biv.append(entry)
        hier = []
        for fits in self.hierarchical:
            steps = []
            for prev, fit in zip([None] + fits[:-1], fits):
                step = fit.report()
                step["variable"] = fit.variables[-1][0] if fit.variables else "NULL"
                if prev is not None:
                    step["deviance_drop"] = float(prev.residual_deviance - fit.residual_deviance)
                    step["df"] = fit.n_params - prev.n_params
                steps.append(step)
            hier.append(steps)
        return {
            "hit_threshold": self.labels.threshold,
            "hit_rate": self.labels.realized_rate,
            "degenerate_ties": self.labels.degenerate_ties,
            "n_papers": len(self.labels),
            "bivariate": biv,
            "hierarchical": hier,
        }


def analyze(scores: pd.DataFrame, top_frac: float = 0.05, degrees: Mapping[str, int] | None = None,
            hierarchies: Sequence[Sequence[str]] | None = None,
            variables: Sequence[str] | None = None) -> AnalysisResult:
    """Hit curves, bivariate and hierarchical logit fits and MI for a score table."""
    deg = {v: 2 for v in ANALYSIS_VARIABLES}
    deg.update(DEFAULT_DEGREES)
    deg.update(degrees or {})
    variables = list(variables or ANALYSIS_VARIABLES)
    hierarchies = DEFAULT_HIERARCHIES if hierarchies is None else hierarchies
    indexed = scores.set_index("paper_id")
    labels = hit_labels(indexed["future_citations"], top_frac)

    series = {}
    curves, biv, mi = [], {}, {}
    for var in variables:
        if var not in indexed:
            raise ValidationError(f"unknown score column {var!r}")
        ps = percentile_rank(indexed[var], var)
        series[var] = ps
        if len(ps) == 0:
            biv[var] = "no non-missing values"
            continue
        curves.append(hit_curve(ps, labels))
        mi[var] = mutual_information(labels, ps)
        try:
            biv[var] = fit_logistic_poly(ps, labels, deg[var])
        except DegenerateError as exc:
            biv[var] = str(exc)
    hier = []
    for order in hierarchies:
        missing = [v for v in order if v not in series]
        if missing:
            raise ValidationError(f"hierarchy uses unanalysed variables {missing}")
        try:
            hier.append(hierarchical_fit([(series[v], deg[v]) for v in order], labels))
        except DegenerateError as exc:
            logger.warning("hierarchical fit %s skipped: %s", order, exc)
    cols = ["variable", "percentile", "probability", "n"]
    curve_df = pd.concat(curves, ignore_index=True) if curves else pd.DataFrame(columns=cols)
    return AnalysisResult(labels, curve_df[cols], biv, hier, mi)
