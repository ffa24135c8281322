"""Posting activity: completion curves and the exponential saturation model.

The fraction of posts published after a fraction ``t`` of a conversation's
lifetime is modelled as ``1 - exp(-alpha * t)``. ``alpha`` is the saturation
rate and ``1 / alpha`` the saturation time, the point at which about 63% of
the posts exist.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from . import _kernels
from .ingest import Conversation

log = logging.getLogger(__name__)

__all__ = [
    "CompletionCurve",
    "ActivityFit",
    "FitError",
    "completion_points",
    "aggregate_curve",
    "fit_saturation",
    "model_value",
    "change_rate",
    "change_rate_ratio",
]

Weighting = Literal["inverse_variance", "uniform"]


class FitError(RuntimeError):
    pass


def _check_domain(alpha: float, lambda_time: float) -> None:
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    if not 0.0 <= lambda_time <= 1.0:
        raise ValueError(f"lambda_time must lie in [0, 1], got {lambda_time!r}")


def model_value(alpha: float, lambda_time: float) -> float:
    """Volume completion rate ``1 - exp(-alpha * lambda_time)``."""
    _check_domain(alpha, lambda_time)
    return -math.expm1(-alpha * lambda_time)


def change_rate(alpha: float, lambda_time: float) -> float:
    """Derivative of :func:`model_value` with respect to ``lambda_time``."""
    _check_domain(alpha, lambda_time)
    return alpha * math.exp(-alpha * lambda_time)


def change_rate_ratio(alpha: float, t1: float, t2: float) -> float:
    """``change_rate(alpha, t1) / change_rate(alpha, t2)``, i.e. ``exp(alpha * (t2 - t1))``."""
    _check_domain(alpha, t1)
    _check_domain(alpha, t2)
    return math.exp(alpha * (t2 - t1))


def completion_points(conv: Conversation) -> list[tuple[float, float]]:
    """(time completion, volume completion) after each post, in posting order."""
    ts = conv.timestamps_ms
    n = len(ts)
    if n < 2:
        raise ValueError(f"conversation {conv.conversation_id!r} has fewer than 2 posts")
    span = ts[-1] - ts[0]
    if span <= 0:
        raise ValueError(f"conversation {conv.conversation_id!r} has zero duration")
    return [((t - ts[0]) / span, (j + 1) / n) for j, t in enumerate(ts)]


def _time_fractions(conv: Conversation) -> np.ndarray:
    return np.array([p[0] for p in completion_points(conv)], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class CompletionCurve:
    """Mean and population standard deviation of step curves on a regular grid."""

    resolution: float
    lambda_time: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    n: np.ndarray
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.lambda_time)

    @property
    def n_conversations(self) -> int:
        return int(self.n.max()) if len(self.n) else 0


def _grid_size(resolution: float) -> int:
    if not 0 < resolution <= 1:
        raise ValueError(f"resolution must lie in (0, 1], got {resolution!r}")
    size = round(1.0 / resolution)
    if abs(size * resolution - 1.0) > 1e-9:
        raise ValueError(f"1 / resolution must be an integer, got {resolution!r}")
    return size


def aggregate_curve(
    convs: Iterable[Conversation | Sequence[float]], resolution: float = 1e-5
) -> CompletionCurve:
    """Average the conversations' completion step curves on a grid of step ``resolution``.

    Each item is either a Conversation or an ascending array of time
    fractions (one per post, first 0, last 1). The value of a curve at grid
    point ``g`` is the fraction of posts with time fraction <= ``g``.
    Conversations with fewer than 2 posts or zero duration are skipped.
    """
    size = _grid_size(resolution)
    mean = np.zeros(size + 1, dtype=np.float64)
    m2 = np.zeros(size + 1, dtype=np.float64)
    k = 0
    skipped = 0
    for item in convs:
        if isinstance(item, Conversation):
            try:
                times = _time_fractions(item)
            except ValueError as exc:
                log.info("skipping: %s", exc)
                skipped += 1
                continue
        else:
            times = np.asarray(item, dtype=np.float64)
            if times.size == 0:
                skipped += 1
                continue
        k += 1
        _kernels.accumulate_step_curve(times, size, mean, m2, k)
    if k == 0:
        raise ValueError("no valid conversations to aggregate")
    grid = np.arange(size + 1, dtype=np.float64) / size
    sd = np.sqrt(np.maximum(m2 / k, 0.0))
    return CompletionCurve(
        resolution=resolution,
        lambda_time=grid,
        mean=mean,
        sd=sd,
        n=np.full(size + 1, k, dtype=np.int64),
        skipped=skipped,
    )


@dataclass(frozen=True)
class ActivityFit:
    alpha: float
    gamma: float
    chi2_reduced: float
    n_points: int
    residual_sd: float
    iterations: int = 0
    weighting: str = "inverse_variance"

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "chi2_reduced": self.chi2_reduced,
            "n_points": self.n_points,
            "residual_sd": self.residual_sd,
            "iterations": self.iterations,
            "weighting": self.weighting,
        }


def _initial_alpha(x: np.ndarray, y: np.ndarray) -> float:
    # Log-linearize at the point whose value is nearest one half.
    order = np.argsort(np.abs(y - 0.5), kind="stable")
    for idx in order:
        if x[idx] > 0 and 0 < y[idx] < 1:
            return float(-math.log1p(-y[idx]) / x[idx])
    return 1.0


def fit_saturation(
    curve: CompletionCurve,
    weighting: Weighting = "inverse_variance",
    rtol: float = 1e-9,
    max_iter: int = 200,
) -> ActivityFit:
    """Fit the saturation rate to a completion curve by damped Gauss-Newton.

    With ``weighting="inverse_variance"`` each point has weight ``1 / sd**2``
    (unit weight where ``sd`` is zero); ``"uniform"`` gives every point unit
    weight. The reduced chi-square uses ``n_points - 1`` degrees of freedom.

    Empirical curves pinned at both ends have near-zero spread close to
    ``lambda_time = 1`` while the model cannot reach ``(N - 1) / N`` there;
    inverse-variance weights then let those points dominate. Prefer
    ``"uniform"`` for raw aggregate curves.
    """
    x = np.asarray(curve.lambda_time, dtype=np.float64)
    y = np.asarray(curve.mean, dtype=np.float64)
    sd = np.asarray(curve.sd, dtype=np.float64)
    if x.shape != y.shape or x.shape != sd.shape:
        raise ValueError("curve arrays differ in shape")
    n_points = len(x)
    if n_points < 10:
        raise ValueError(f"need at least 10 curve points, got {n_points}")
    if not np.any(y > 0):
        raise ValueError("curve is identically zero")
    if weighting == "inverse_variance":
        w = np.ones_like(sd)
        pos = sd > 0
        w[pos] = 1.0 / sd[pos] ** 2
    elif weighting == "uniform":
        w = np.ones_like(sd)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")

    def ssr(a: float) -> float:
        r = y + np.expm1(-a * x)
        return float(np.dot(w, r * r))

    alpha = _initial_alpha(x, y)
    cost = ssr(alpha)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        e = np.exp(-alpha * x)
        r = y - (1.0 - e)
        jac = x * e
        jtj = float(np.dot(w, jac * jac))
        if jtj <= 0.0:
            raise FitError("degenerate Jacobian")
        step = float(np.dot(w, jac * r)) / jtj
        scale = 1.0
        while True:
            trial = alpha + scale * step
            if trial > 0:
                trial_cost = ssr(trial)
                if trial_cost <= cost:
                    break
            scale *= 0.5
            if scale < 1e-12:
                trial, trial_cost = alpha, cost
                break
        delta = trial - alpha
        alpha, cost = trial, trial_cost
        if abs(delta) <= rtol * abs(alpha):
            converged = True
            break
    if not converged:
        raise FitError(f"no convergence after {max_iter} iterations (alpha={alpha!r})")
    resid = y + np.expm1(-alpha * x)
    return ActivityFit(
        alpha=alpha,
        gamma=1.0 / alpha,
        chi2_reduced=cost / (n_points - 1),
        n_points=n_points,
        residual_sd=float(np.sqrt(np.mean(resid * resid))),
        iterations=it,
        weighting=weighting,
    )
