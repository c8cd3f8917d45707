"""Linear quantile regression by pinball-loss minimization.

The solver is iteratively reweighted least squares on a smoothed pinball
loss. Writing the loss as 0.5*|r| + (tau - 0.5)*r and replacing |r| by
sqrt(r^2 + h^2) gives a smooth convex surrogate whose quadratic majorizer
yields the weighted normal equations

    X' diag(0.5/s) X beta = X' (0.5/s * y) + (tau - 0.5) X' 1,

with s = sqrt(r^2 + h^2) at the current residuals. Three details make this
fast and reliable on the seasonal designs here, whose condition numbers
reach 1e4..1e5:

- the iteration runs in the orthonormal basis of a thin QR factorization
  (same fit, vastly better IRLS contraction; coefficients are mapped back
  through R at the end);
- every reweighted step is followed by an exact line search along the step
  direction (the smoothed objective is convex, so the 1-D slope is bracketed
  and bisected);
- the smoothing width h anneals from 1e-2 to 1e-6 of the response scale,
  and a final polish solves exactly through the p observations with the
  smallest residuals (pinball optima interpolate p data points), keeping
  that vertex whenever it scores no worse.

Starting point is the least-squares fit of the same design. Everything is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidTau,
    QrloadError,
    RankDeficient,
    SolverDiverged,
    UnknownTau,
)
from .features import BasisSpec, DesignMatrix, build_quantreg_design
from .ingest import HOURS_PER_DAY

#: The nine decile levels every model carries.
QUANTILE_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))

_SMOOTHING_LEVELS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_MAX_ITER = 500
_COEF_TOL = 1e-9
_DIVERGENCE_TOL = 1e-7
_WARM_LEVEL_BUDGET = 15
#: n * p^2 above which the final annealing level gets a reduced budget;
#: large fits converge statistically long before vertex precision matters.
_BIG_PROBLEM_COST = 2.5e6
_BIG_FINAL_BUDGET = 60


def pinball(y, q, tau) -> np.ndarray | float:
    """Pinball (quantile) loss: tau*(y-q) above the forecast, (1-tau)*(q-y) below."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0.0) or np.any(tau >= 1.0):
        raise InvalidTau(f"tau must lie strictly inside (0, 1), got {tau}")
    d = np.asarray(y, dtype=float) - np.asarray(q, dtype=float)
    # d*tau - d*(d<0) rather than d*(tau - (d<0)): one rounding per term,
    # which keeps e.g. (q-y) - tau*(q-y) exact for decimal tau.
    out = d * tau - d * (d < 0.0)
    return out if out.ndim else float(out)


def _pinball_sum(residuals: np.ndarray, tau: float) -> float:
    return float(np.sum(residuals * (tau - (residuals < 0.0))))


def tau_index(taus, tau: float) -> int:
    for i, t in enumerate(taus):
        if abs(t - tau) < 1e-9:
            return i
    raise UnknownTau(f"tau={tau} not in grid {tuple(taus)}")


def _line_search(r: np.ndarray, xd: np.ndarray, tau: float, h2: float) -> float:
    """Exact step length along xd: bisect the (monotone) 1-D slope."""

    def slope(a: float) -> float:
        rr = r - a * xd
        return float(-xd @ (rr / (2.0 * np.sqrt(rr * rr + h2)) + (tau - 0.5)))

    lo, hi = 0.0, 1.0
    if slope(hi) < 0.0:
        while slope(hi) < 0.0 and hi < 1024.0:
            hi *= 2.0
    for _ in range(16):
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def qr_fit(design, y, tau: float, *, max_iter: int = _MAX_ITER) -> np.ndarray:
    """Fit one quantile regression, returning the coefficient vector.

    Deterministic: fixed least-squares initialization and annealing
    schedule. Raises RankDeficient when the design is not full column rank
    (or n <= p) and SolverDiverged when the iteration budget runs out while
    the objective is still moving.
    """
    x = design.values if isinstance(design, DesignMatrix) else np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if tau <= 0.0 or tau >= 1.0:
        raise InvalidTau(f"tau must lie strictly inside (0, 1), got {tau}")
    n, p = x.shape
    if len(y) != n:
        raise DimensionMismatch(f"design has {n} rows, y has {len(y)}")
    if n <= p:
        raise RankDeficient(f"need n > p, got n={n}, p={p}")

    q, rmat = np.linalg.qr(x)
    diag = np.abs(np.diag(rmat))
    if diag.min() <= max(n, p) * np.finfo(float).eps * diag.max():
        raise RankDeficient(f"design is rank deficient ({p} columns)")

    gamma = q.T @ y  # least-squares fit in the orthonormal basis
    scale = float(np.std(y))
    if not scale > 0.0:
        scale = 1.0
    tol = _COEF_TOL * max(1.0, scale)
    qt = np.ascontiguousarray(q.T)
    lin = (tau - 0.5) * q.sum(axis=0)

    final_budget = max_iter - 4 * _WARM_LEVEL_BUDGET
    if n * p * p > _BIG_PROBLEM_COST:
        final_budget = min(final_budget, _BIG_FINAL_BUDGET)
    budgets = (_WARM_LEVEL_BUDGET,) * 4 + (max(final_budget, 1),)

    r = y - q @ gamma
    obj = _pinball_sum(r, tau)
    obj_step = np.inf
    iters = 0
    for level, budget in zip(_SMOOTHING_LEVELS, budgets):
        h2 = (level * scale) ** 2
        for _ in range(budget):
            if iters >= max_iter:
                break
            w = 0.5 / np.sqrt(r * r + h2)
            rhs = qt @ (w * y) + lin
            try:
                target = np.linalg.solve((qt * w) @ q, rhs)
            except np.linalg.LinAlgError:
                target = np.linalg.lstsq((qt * w) @ q, rhs, rcond=None)[0]
            direction = target - gamma
            alpha = _line_search(r, q @ direction, tau, h2)
            gamma = gamma + alpha * direction
            r = y - q @ gamma
            new_obj = _pinball_sum(r, tau)
            obj_step = abs(new_obj - obj) / max(abs(new_obj), 1e-300)
            obj = new_obj
            iters += 1
            if float(np.max(np.abs(alpha * direction))) < tol:
                break
    if not np.isfinite(obj) or (iters >= max_iter and obj_step > _DIVERGENCE_TOL):
        raise SolverDiverged(
            f"no convergence in {iters} iterations "
            f"(relative objective change {obj_step:.2e})")

    # Vertex polish: exact interpolation through the p smallest-residual
    # observations whose design rows are linearly independent (repeated
    # calendar rows would otherwise make the system singular).
    basic = _independent_rows(q, np.argsort(np.abs(r), kind="stable"))
    if basic is not None:
        try:
            cand = np.linalg.solve(q[basic], y[basic])
            if _pinball_sum(y - q @ cand, tau) <= obj:
                gamma = cand
        except np.linalg.LinAlgError:
            pass
    return np.linalg.solve(rmat, gamma)


def _independent_rows(q: np.ndarray, order: np.ndarray) -> np.ndarray | None:
    """First p rows along ``order`` that are linearly independent."""
    p = q.shape[1]
    basis = np.zeros((p, p))
    chosen = np.empty(p, dtype=int)
    k = 0
    for idx in order:
        v = q[idx] - basis[:k].T @ (basis[:k] @ q[idx])
        v -= basis[:k].T @ (basis[:k] @ v)  # reorthogonalize
        norm = float(np.linalg.norm(v))
        if norm > 1e-8 * max(float(np.linalg.norm(q[idx])), 1e-30):
            basis[k] = v / norm
            chosen[k] = idx
            k += 1
            if k == p:
                return chosen
    return None


@dataclass(frozen=True)
class QuantileModelSet:
    """24 x 9 fitted coefficient vectors for one zone's remainder model."""

    zone: str
    spec: BasisSpec
    epoch_weekday: int
    taus: tuple
    coef: np.ndarray        # (24, len(taus), p)
    objective: np.ndarray   # (24, len(taus)) in-sample pinball sums

    @property
    def n_models(self) -> int:
        return self.coef.shape[0] * self.coef.shape[1]


def fit_model_set(y_remainder, days, spec: BasisSpec | None = None, *,
                  epoch_weekday: int = 0, zone: str = "",
                  taus: tuple = QUANTILE_GRID) -> QuantileModelSet:
    """Fit all per-hour, per-quantile remainder regressions.

    ``y_remainder`` is the detrended log-load over whole days, hour-major;
    ``days`` are the matching 1-based day indices from the annual epoch.
    Solver errors are re-raised annotated with the (hour, tau) that failed.
    """
    spec = spec or BasisSpec()
    days = np.asarray(days, dtype=int).reshape(-1)
    y = np.asarray(y_remainder, dtype=float).reshape(-1)
    if len(y) != HOURS_PER_DAY * len(days):
        raise DimensionMismatch(
            f"{len(y)} remainder values do not cover {len(days)} days of 24 hours")
    ymat = y.reshape(len(days), HOURS_PER_DAY)

    p = spec.n_quantreg_columns
    coef = np.empty((HOURS_PER_DAY, len(taus), p))
    objective = np.empty((HOURS_PER_DAY, len(taus)))
    for hour in range(HOURS_PER_DAY):
        design = build_quantreg_design(days, hour, spec, epoch_weekday)
        yh = ymat[:, hour]
        for i, tau in enumerate(taus):
            try:
                coef[hour, i] = qr_fit(design, yh, tau)
            except QrloadError as e:
                raise type(e)(f"hour {hour}, tau {tau}: {e}") from e
            objective[hour, i] = _pinball_sum(yh - design.values @ coef[hour, i], tau)
    return QuantileModelSet(zone=zone, spec=spec, epoch_weekday=epoch_weekday,
                            taus=tuple(taus), coef=coef, objective=objective)


def qr_predict(model: QuantileModelSet, days, hour: int, tau: float) -> np.ndarray:
    """Evaluate one fitted quantile curve on the given days at the fixed hour."""
    i = tau_index(model.taus, tau)
    design = build_quantreg_design(days, hour, model.spec, model.epoch_weekday)
    return design.values @ model.coef[hour, i]
