"""Adjusted predictions and marginal effects with delta-method inference.

Every operation follows the same counterfactual recipe: rewrite the design
matrix so a chosen variable takes a fixed level or value in every row (the
term map keeps linked squared columns consistent), push the rows through the
fitted logit, and average.  Standard errors propagate the coefficient
covariance through the gradient of that average (delta method); a
nonparametric bootstrap is available as a cross-check.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .formula import DesignMatrix, TermMap, substitute_matrix
from .logit import FitError, FitResult, fit

Z95 = 1.959964  # fixed critical value for 95% intervals


class MarginsError(ValueError):
    """Invalid margin request (unknown variable/level, bad grid, bad combination)."""


def zstar(ci_level: float) -> float:
    """Normal critical value; pinned to 1.959964 at the default 95% level."""
    if not 0.0 < ci_level < 1.0:
        raise MarginsError(f"ci_level must be in (0,1), got {ci_level}")
    if abs(ci_level - 0.95) < 1e-12:
        return Z95
    return float(norm.ppf(0.5 + ci_level / 2.0))


@dataclass(frozen=True)
class MarginRow:
    """One estimated margin with its delta-method (or bootstrap) inference."""

    label: str
    at_value: Optional[float]
    estimate: float
    se: float
    z: float
    p: float
    ci_low: float
    ci_high: float
    extrapolated: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class MarginRequest:
    """Declarative margin specification, routed by :func:`compute_margins`.

    ``kind`` is one of aap, ame, apm, mem, aprv, merv.  ``at`` carries an
    optional (continuous variable, grid) pair; factor contrasts use ``base``
    (defaulting to the model's reference level).
    """

    kind: str
    target: str
    levels: Optional[tuple[str, ...]] = None
    base: Optional[str] = None
    at: Optional[tuple[str, tuple[float, ...]]] = None
    ci_level: float = 0.95
    discrete: bool = False  # unit-change effects for continuous variables

    def __post_init__(self):
        if self.kind not in ("aap", "ame", "apm", "mem", "aprv", "merv"):
            raise MarginsError(f"unknown margin kind {self.kind!r}")
        if self.at is not None:
            _check_grid(self.at[1])


def _check_grid(grid: Sequence[float]):
    if len(grid) == 0:
        raise MarginsError("empty grid")
    arr = np.asarray(grid, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise MarginsError("grid contains non-finite values")
    if (np.diff(arr) <= 0).any():
        raise MarginsError("grid values must be sorted strictly ascending")


def _design_array(X: Union[np.ndarray, DesignMatrix]) -> np.ndarray:
    return X.X if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)


def _term_map(fr: FitResult) -> TermMap:
    if fr.term_map is None:
        raise MarginsError("margins require a fit carrying a term map")
    return fr.term_map


def mean_design_row(X: Union[np.ndarray, DesignMatrix], term_map: TermMap) -> np.ndarray:
    """Single synthetic row of sample means.

    Factors become fractional indicators (their level shares) and a squared
    column is the square of its variable's mean, keeping the row consistent
    with the substitution semantics.
    """
    arr = _design_array(X)
    row = arr.mean(axis=0)
    for var in term_map.variables:
        if term_map.is_factor(var):
            continue
        sq = term_map.square_col(var)
        if sq is not None:
            m = row[term_map.linear_col(var)]
            row[sq] = m * m
    row[0] = 1.0
    return row


def _audit_squares(Xsub: np.ndarray, term_map: TermMap):
    # every square column must equal its base column squared, row by row
    for var in term_map.variables:
        sq = term_map.square_col(var)
        if sq is None:
            continue
        base = Xsub[:, term_map.linear_col(var)]
        if not np.array_equal(Xsub[:, sq], base * base):
            raise MarginsError(
                f"square column of {var!r} is inconsistent with its base column")


def _rows(fr: FitResult, X, atmeans: bool) -> np.ndarray:
    arr = _design_array(X)
    if atmeans:
        return mean_design_row(arr, _term_map(fr))[None, :]
    return arr


def _aap_est_grad(beta: np.ndarray, Xsub: np.ndarray):
    p = expit(Xsub @ beta)
    w = p * (1.0 - p)
    est = float(p.mean())
    grad = (Xsub * w[:, None]).mean(axis=0)
    return est, grad


def _row_from(label: str, at_value, est: float, grad: np.ndarray, cov: np.ndarray,
              ci_level: float, extrapolated: bool = False) -> MarginRow:
    var = float(grad @ cov @ grad)
    se = math.sqrt(var) if var > 0 else 0.0
    if se > 0:
        z = est / se
        p = 2.0 * float(norm.sf(abs(z)))
    else:
        z = 0.0 if est == 0.0 else math.copysign(math.inf, est)
        p = 1.0 if est == 0.0 else 0.0
    half = zstar(ci_level) * se
    return MarginRow(label=label, at_value=at_value, estimate=est, se=se, z=z, p=p,
                     ci_low=est - half, ci_high=est + half, extrapolated=extrapolated)


def aap_factor(fr: FitResult, X, var: str, level: str, *,
               atmeans: bool = False, ci_level: float = 0.95) -> MarginRow:
    """Average adjusted prediction with every row assigned to ``level``."""
    tm = _term_map(fr)
    rows = _rows(fr, X, atmeans)
    try:
        Xsub = substitute_matrix(rows, tm, var, level)
    except (KeyError, ValueError) as exc:
        raise MarginsError(str(exc)) from exc
    _audit_squares(Xsub, tm)
    est, grad = _aap_est_grad(fr.beta, Xsub)
    prefix = "APM" if atmeans else "AAP"
    return _row_from(f"{prefix} {var}={level}", None, est, grad, fr.cov, ci_level)


def ame_factor(fr: FitResult, X, var: str, level: str, base: str, *,
               atmeans: bool = False, ci_level: float = 0.95) -> MarginRow:
    """Discrete marginal effect: AAP at ``level`` minus AAP at ``base``.

    Both averages share the same observed rows, so the estimate equals the
    difference of the two AAP estimates exactly.
    """
    tm = _term_map(fr)
    rows = _rows(fr, X, atmeans)
    try:
        X_level = substitute_matrix(rows, tm, var, level)
        X_base = substitute_matrix(rows, tm, var, base)
    except (KeyError, ValueError) as exc:
        raise MarginsError(str(exc)) from exc
    _audit_squares(X_level, tm)
    est_l, grad_l = _aap_est_grad(fr.beta, X_level)
    est_b, grad_b = _aap_est_grad(fr.beta, X_base)
    prefix = "MEM" if atmeans else "AME"
    return _row_from(f"{prefix} {var}={level}-{base}", None,
                     est_l - est_b, grad_l - grad_b, fr.cov, ci_level)


def _observed_range(fr: FitResult, X, var: str):
    arr = _design_array(X)
    col = arr[:, _term_map(fr).linear_col(var)]
    return float(col.min()), float(col.max())


def aap_continuous_at(fr: FitResult, X, var: str, grid: Sequence[float], *,
                      atmeans: bool = False, ci_level: float = 0.95) -> list[MarginRow]:
    """AAP curve over a grid of values of a continuous variable.

    Each grid value is substituted into every row (linked squared columns
    update together) and the predictions averaged.  Rows evaluated outside
    the observed range of ``var`` are flagged ``extrapolated``.
    """
    _check_grid(grid)
    tm = _term_map(fr)
    lo, hi = _observed_range(fr, X, var)
    rows = _rows(fr, X, atmeans)
    prefix = "APM" if atmeans else "AAP"
    out = []
    for v in grid:
        Xsub = substitute_matrix(rows, tm, var, v)
        _audit_squares(Xsub, tm)
        est, grad = _aap_est_grad(fr.beta, Xsub)
        out.append(_row_from(f"{prefix} {var}", float(v), est, grad, fr.cov,
                             ci_level, extrapolated=not lo <= v <= hi))
    return out


def _slope_cols(tm: TermMap, var: str):
    lin = tm.linear_col(var)
    sq = tm.square_col(var)
    return lin, sq


def _ame_cont_est_grad(beta, X, tm, var, v):
    """Instantaneous-derivative AME and its delta-method gradient.

    ``v is None`` means each row keeps its own observed value; otherwise
    every row is evaluated with ``var`` substituted at ``v``.
    """
    lin, sq = _slope_cols(tm, var)
    b_lin = beta[lin]
    b_sq = beta[sq] if sq is not None else 0.0
    if v is None:
        Xe = np.asarray(X, dtype=np.float64)
        vals = Xe[:, lin]
    else:
        Xe = substitute_matrix(X, tm, var, v)
        vals = np.full(Xe.shape[0], float(v))
    _audit_squares(Xe, tm)
    p = expit(Xe @ beta)
    w = p * (1.0 - p)
    slope = b_lin + 2.0 * b_sq * vals
    m = w * slope
    est = float(m.mean())
    # d m_i / d beta = w(1-2p) * slope * x_i + w * e_i,
    # e_i being 1 at the linear column and 2 v_i at the square column
    grad = (Xe * (w * (1.0 - 2.0 * p) * slope)[:, None]).mean(axis=0)
    grad[lin] += w.mean()
    if sq is not None:
        grad[sq] += float((2.0 * vals * w).mean())
    return est, grad


def _shift_by_one(X: np.ndarray, tm: TermMap, var: str) -> np.ndarray:
    out = np.array(X, dtype=np.float64, copy=True)
    lin = tm.linear_col(var)
    out[:, lin] = out[:, lin] + 1.0
    sq = tm.square_col(var)
    if sq is not None:
        out[:, sq] = out[:, lin] * out[:, lin]
    return out


def ame_continuous_at(fr: FitResult, X, var: str,
                      grid: Union[str, Sequence[float]] = "observed", *,
                      atmeans: bool = False, discrete: bool = False,
                      ci_level: float = 0.95) -> list[MarginRow]:
    """Marginal effect of a continuous variable.

    By default this is the instantaneous derivative: p(1-p) times the
    linear-predictor slope, which includes the chain-rule contribution of a
    squared term.  ``discrete=True`` switches to the unit-change difference
    mean[p(v+1) - p(v)] instead.  With ``grid="observed"`` each row keeps
    its own value and a single averaged row is returned; otherwise one row
    per grid value.
    """
    tm = _term_map(fr)
    rows = _rows(fr, X, atmeans)
    prefix = "MEM" if atmeans else "AME"

    def one(v):
        if discrete:
            base = rows if v is None else substitute_matrix(rows, tm, var, float(v))
            upper = _shift_by_one(base, tm, var)
            _audit_squares(upper, tm)
            est_u, grad_u = _aap_est_grad(fr.beta, upper)
            est_b, grad_b = _aap_est_grad(fr.beta, base)
            return est_u - est_b, grad_u - grad_b
        return _ame_cont_est_grad(fr.beta, rows, tm, var, v)

    if isinstance(grid, str):
        if grid != "observed":
            raise MarginsError(f"grid must be a sequence or 'observed', got {grid!r}")
        est, grad = one(None)
        label = f"{prefix} {var}" if atmeans else f"{prefix} {var} (observed)"
        return [_row_from(label, None, est, grad, fr.cov, ci_level)]
    _check_grid(grid)
    lo, hi = _observed_range(fr, X, var)
    out = []
    for v in grid:
        est, grad = one(float(v))
        out.append(_row_from(f"{prefix} {var}", float(v), est, grad, fr.cov,
                             ci_level, extrapolated=not lo <= v <= hi))
    return out


def aprv(fr: FitResult, X, factor: str, levels: Sequence[str], var: str,
         grid: Sequence[float], *, atmeans: bool = False,
         ci_level: float = 0.95) -> list[MarginRow]:
    """Adjusted predictions at representative values: fix a factor level and a
    continuous value together, averaged over rows; one row per (level, v)."""
    _check_grid(grid)
    tm = _term_map(fr)
    lo, hi = _observed_range(fr, X, var)
    rows = _rows(fr, X, atmeans)
    prefix = "APM" if atmeans else "APRV"
    out = []
    for level in levels:
        try:
            X_level = substitute_matrix(rows, tm, factor, level)
        except (KeyError, ValueError) as exc:
            raise MarginsError(str(exc)) from exc
        for v in grid:
            Xsub = substitute_matrix(X_level, tm, var, float(v))
            _audit_squares(Xsub, tm)
            est, grad = _aap_est_grad(fr.beta, Xsub)
            out.append(_row_from(f"{prefix} {factor}={level}", float(v), est, grad,
                                 fr.cov, ci_level, extrapolated=not lo <= v <= hi))
    return out


def merv(fr: FitResult, X, factor: str, level: str, base: str, var: str,
         grid: Sequence[float], *, atmeans: bool = False,
         ci_level: float = 0.95) -> list[MarginRow]:
    """Marginal effects at representative values: APRV(level) - APRV(base)
    per grid value, with the delta-method gradient of the difference."""
    _check_grid(grid)
    tm = _term_map(fr)
    lo, hi = _observed_range(fr, X, var)
    rows = _rows(fr, X, atmeans)
    try:
        X_level = substitute_matrix(rows, tm, factor, level)
        X_base = substitute_matrix(rows, tm, factor, base)
    except (KeyError, ValueError) as exc:
        raise MarginsError(str(exc)) from exc
    prefix = "MEM" if atmeans else "MERV"
    out = []
    for v in grid:
        Xl = substitute_matrix(X_level, tm, var, float(v))
        Xb = substitute_matrix(X_base, tm, var, float(v))
        _audit_squares(Xl, tm)
        est_l, grad_l = _aap_est_grad(fr.beta, Xl)
        est_b, grad_b = _aap_est_grad(fr.beta, Xb)
        out.append(_row_from(f"{prefix} {factor}={level}-{base}", float(v),
                             est_l - est_b, grad_l - grad_b, fr.cov, ci_level,
                             extrapolated=not lo <= v <= hi))
    return out


def _factor_levels(tm: TermMap, var: str) -> tuple[str, ...]:
    if not tm.is_factor(var):
        raise MarginsError(f"{var!r} is not a factor in the model")
    return tm.factor_levels[var]


def compute_margins(fr: FitResult, X, request: MarginRequest) -> list[MarginRow]:
    """Route a :class:`MarginRequest` to the appropriate operation."""
    tm = _term_map(fr)
    atmeans = request.kind in ("apm", "mem")
    effect = request.kind in ("ame", "mem", "merv")
    ci = request.ci_level
    target = request.target

    if request.kind in ("aprv", "merv") or (tm.is_factor(target) and request.at is not None):
        if request.at is None:
            raise MarginsError("representative-value margins need an `at` grid")
        levels = request.levels or _factor_levels(tm, target)
        at_var, grid = request.at
        if effect:
            base = request.base or tm.reference[target]
            rows: list[MarginRow] = []
            for level in levels:
                if level == base:
                    continue
                rows.extend(merv(fr, X, target, level, base, at_var, grid,
                                 atmeans=atmeans, ci_level=ci))
            return rows
        return aprv(fr, X, target, levels, at_var, grid, atmeans=atmeans, ci_level=ci)

    if tm.is_factor(target):
        levels = request.levels or _factor_levels(tm, target)
        if effect:
            base = request.base or tm.reference[target]
            return [ame_factor(fr, X, target, level, base, atmeans=atmeans, ci_level=ci)
                    for level in levels if level != base]
        return [aap_factor(fr, X, target, level, atmeans=atmeans, ci_level=ci)
                for level in levels]

    # continuous target
    if request.at is not None:
        at_var, grid = request.at
        if at_var != target:
            raise MarginsError("`at` grid variable must match a continuous target")
        if effect:
            return ame_continuous_at(fr, X, target, grid, atmeans=atmeans,
                                     discrete=request.discrete, ci_level=ci)
        return aap_continuous_at(fr, X, target, grid, atmeans=atmeans, ci_level=ci)
    if effect:
        return ame_continuous_at(fr, X, target, "observed", atmeans=atmeans,
                                 discrete=request.discrete, ci_level=ci)
    raise MarginsError("adjusted predictions for a continuous variable need an `at` grid")


@dataclass(frozen=True)
class BootstrapResult:
    rows: list[MarginRow]
    replicates: int
    failures: int


def bootstrap_se(design: DesignMatrix, request: MarginRequest, reps: int, seed: int, *,
                 max_iter: int = 100, tol: float = 1e-10,
                 workers: Optional[int] = None) -> BootstrapResult:
    """Nonparametric bootstrap of a margin request.

    Rows are resampled with replacement, the model refit, and the margins
    recomputed per replicate; the reported standard error is the sd of the
    replicate estimates.  Replicate seeds are spawned from the master seed,
    so results do not depend on scheduling.  Replicates whose refit fails
    are recorded and skipped; more than 10% failures is an error.
    """
    if reps < 100:
        raise MarginsError(f"bootstrap needs at least 100 replicates, got {reps}")
    full_fit = fit(design, max_iter=max_iter, tol=tol)
    full_rows = compute_margins(full_fit, design, request)
    n = design.n
    children = np.random.SeedSequence(seed).spawn(reps)

    def one(child) -> Optional[np.ndarray]:
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, size=n)
        Xb = design.X[idx]
        yb = design.y[idx]
        try:
            fr = fit(Xb, yb, max_iter=max_iter, tol=tol, term_map=design.term_map)
            rows = compute_margins(fr, Xb, request)
        except (FitError, MarginsError):
            return None
        return np.array([r.estimate for r in rows])

    if workers is None:
        workers = int(os.environ.get("MARGINS_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(c) for c in children]

    kept = [r for r in results if r is not None]
    failures = reps - len(kept)
    if failures > 0.10 * reps:
        raise MarginsError(f"{failures}/{reps} bootstrap replicates failed to fit")
    estimates = np.vstack(kept)
    ses = estimates.std(axis=0, ddof=1)
    zs = zstar(request.ci_level)
    rows = []
    for row, se in zip(full_rows, map(float, ses)):
        if se > 0:
            z = row.estimate / se
            p = 2.0 * float(norm.sf(abs(z)))
        else:
            z = 0.0 if row.estimate == 0.0 else math.copysign(math.inf, row.estimate)
            p = 1.0 if row.estimate == 0.0 else 0.0
        rows.append(MarginRow(label=row.label, at_value=row.at_value,
                              estimate=row.estimate, se=se, z=z, p=p,
                              ci_low=row.estimate - zs * se,
                              ci_high=row.estimate + zs * se,
                              extrapolated=row.extrapolated))
    return BootstrapResult(rows=rows, replicates=reps, failures=failures)


def margins_tsv(rows: Sequence[MarginRow]) -> str:
    """Render margin rows as TSV with 17-significant-digit numbers."""
    def num(x) -> str:
        if x is None:
            return ""
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{float(x):.17g}"

    lines = ["label\tat\testimate\tstd_err\tz\tp\tci_low\tci_high"]
    for r in rows:
        lines.append("\t".join([
            r.label, num(r.at_value), num(r.estimate), num(r.se),
            num(r.z), num(r.p), num(r.ci_low), num(r.ci_high),
        ]))
    return "\n".join(lines) + "\n"
