"""Brute-force cross-checks for the analytic decision rule."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .behavior import Behavior, PairDistribution
from .decision import TOL_ZERO, ContractError, Verdict, build_witness, decide_single
from .errors import DomainError, PreconditionError
from .kernels import classify_batch, grid_feasible_batch
from .quantum import ideal_behavior


@dataclass(frozen=True)
class OracleConfig:
    grid_points: int = 10001
    tolerance: float = 1e-9
    bisection_tol: float = 1e-10

    def __post_init__(self):
        if self.grid_points < 3:
            raise DomainError("grid_points must be at least 3")
        if self.tolerance <= 0 or self.bisection_tol <= 0:
            raise DomainError("tolerances must be positive")


@dataclass(frozen=True)
class GridResult:
    exists: bool
    point: Optional[tuple]  # (c1, c2) of the first hit
    first_axis: bool
    second_axis: bool


def _scan(La, Ra, Lb, Rb, c, n, tol):
    """First grid point ``x`` on ``[La, Ra]`` with ``c/x`` in ``[Lb, Rb]`` (widened)."""
    if La <= 0.0 <= Ra and abs(c) <= tol:
        return 0.0, (_clamp(0.0, Lb, Rb) if c == 0.0 else float("nan"))
    t = np.arange(n, dtype=float) / (n - 1)
    x = La + (Ra - La) * t
    x[-1] = Ra
    nz = x != 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        y = c / np.where(nz, x, 1.0)
    hit = np.flatnonzero(nz & (Lb - tol <= y) & (y <= Rb + tol))
    if hit.size == 0:
        return None
    k = hit[0]
    return float(x[k]), float(y[k])


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


def grid_feasibility(b: Behavior, cfg: OracleConfig = OracleConfig()) -> GridResult:
    """Search a uniform grid of each rectangle side for a point on the hyperbola."""
    a1, a2, b1, b2, c = b.moments()
    L1, R1 = abs(a1 + b1) - 1.0, 1.0 - abs(a1 - b1)
    L2, R2 = abs(a2 + b2) - 1.0, 1.0 - abs(a2 - b2)
    first = _scan(L1, R1, L2, R2, c, cfg.grid_points, cfg.tolerance)
    second = _scan(L2, R2, L1, R1, c, cfg.grid_points, cfg.tolerance)
    point = None
    if first is not None:
        point = first
    elif second is not None:
        point = (second[1], second[0])
    return GridResult(point is not None, point, first is not None, second is not None)


# ---------------------------------------------------------------- deterministic strategies

LAMBDA_VALUES = ((1, 1), (1, -1), (-1, 1), (-1, -1))  # (alpha_i, beta_i)


@dataclass(frozen=True)
class Decomposition:
    """Weights over the four deterministic ``(alpha_i, beta_i)`` per source."""

    w1: tuple
    w2: tuple

    def resum(self) -> tuple:
        """Means ``(alpha1, alpha2, beta1, beta2, corrAB)`` over all 16 strategies."""
        sums = np.zeros(5)
        for p, (x1, y1) in zip(self.w1, LAMBDA_VALUES):
            for q, (x2, y2) in zip(self.w2, LAMBDA_VALUES):
                weight = p * q
                sums += weight * np.array([x1, x2, y1, y2, (x1 * x2) * (y1 * y2)])
        return tuple(float(v) for v in sums)


def enumerate_deterministic(
    b: Behavior, tol_zero: float = TOL_ZERO, tol: float = 1e-9
) -> Optional[Decomposition]:
    """Convex weights over product-deterministic strategies, or ``None``.

    The witness construction supplies candidate weights; they are accepted
    only after direct re-summation over all 16 strategies reproduces the five
    means.
    """
    try:
        model = build_witness(b, tol_zero=tol_zero)
    except ContractError:
        return None
    dec = Decomposition(model.mu1.cells(), model.mu2.cells())
    if min(dec.w1 + dec.w2) < 0 or abs(sum(dec.w1) - 1) > tol or abs(sum(dec.w2) - 1) > tol:
        return None
    slack = 2.0 * tol_zero  # corrAB may sit inside the tolerance band
    dev = max(abs(x - y) for x, y in zip(dec.resum(), b.moments()))
    return dec if dev <= max(tol, math.sqrt(slack)) else None


# ---------------------------------------------------------------- bisection


def verdict_at(theta: float, phi: float, tol_zero: float = TOL_ZERO) -> Verdict:
    return decide_single(ideal_behavior(theta, phi), tol_zero, witness=False).verdict


def bisect_violation_boundary(
    phi: float, theta_lo: float, theta_hi: float, cfg: OracleConfig = OracleConfig()
) -> float:
    """Locate the verdict flip along ``theta`` at fixed ``phi`` by bisection."""
    lo, hi = float(theta_lo), float(theta_hi)
    if not lo < hi:
        raise PreconditionError(f"bracket [{lo}, {hi}] is empty")
    v_lo, v_hi = verdict_at(lo, phi), verdict_at(hi, phi)
    if v_lo is v_hi:
        raise PreconditionError(
            f"verdict is {v_lo.value} at both ends of [{lo}, {hi}] for phi={phi}"
        )
    while hi - lo > cfg.bisection_tol:
        mid = 0.5 * (lo + hi)
        if verdict_at(mid, phi) is v_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def flip_brackets(phi: float, lo: float = 0.0, hi: float = math.pi / 2, step: float = math.pi / 200):
    """Coarse scan for sub-intervals of ``[lo, hi]`` whose end verdicts differ."""
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    thetas = np.linspace(lo, hi, n)
    verdicts = [verdict_at(t, phi) for t in thetas]
    return [
        (float(thetas[k]), float(thetas[k + 1]))
        for k in range(n - 1)
        if verdicts[k] is not verdicts[k + 1]
    ]


# ---------------------------------------------------------------- random comparison


def random_behaviors(n: int, seed: int) -> np.ndarray:
    """``(n, 5)`` array of means drawn independently and uniformly from [-1, 1]."""
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(int(n), 5))


@dataclass(frozen=True)
class OracleComparison:
    n: int
    seed: int
    band: float
    non_bicontextual: int
    grid_disagreements_in_band: int
    grid_disagreements_out_of_band: int
    axis_disagreements: int
    side_disagreements: int
    necessary_failures: int
    scalar_disagreements: int
    scalar_checked: int

    @property
    def ok(self) -> bool:
        return (
            self.grid_disagreements_out_of_band == 0
            and self.side_disagreements == 0
            and self.necessary_failures == 0
            and self.scalar_disagreements == 0
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def compare_random(
    n: int,
    seed: int,
    cfg: OracleConfig = OracleConfig(),
    band: float = 1e-4,
    scalar: int = 0,
    tol_zero: float = TOL_ZERO,
) -> OracleComparison:
    """Cross-check analytic verdicts against the grid oracle on random behaviors.

    ``scalar`` rows are additionally pushed through the per-behavior
    :func:`decide_single` (witness included) and compared with the batch
    kernel; pass ``n`` to check every row.
    """
    m = random_behaviors(n, seed)
    batch = classify_batch(m, tol_zero)
    analytic = batch.non_bicontextual
    first, second = grid_feasible_batch(m, cfg.grid_points, cfg.tolerance)
    grid = first | second
    disagree = grid != analytic
    in_band = np.abs(batch.single_lhs) < band

    sides_any = batch.sides.any(axis=1)
    necessary_bad = batch.necessary_violated & analytic

    scalar_bad = 0
    k = min(int(scalar), m.shape[0])
    for i in range(k):
        b = Behavior(*m[i])
        rep = decide_single(b, tol_zero)
        same = (
            (rep.verdict is Verdict.NON_BICONTEXTUAL) == bool(analytic[i])
            and rep.single_lhs == batch.single_lhs[i]
            and tuple(rep.sides) == tuple(bool(s) for s in batch.sides[i])
            and (rep.witness is not None) == bool(analytic[i])
        )
        scalar_bad += not same

    return OracleComparison(
        n=int(n),
        seed=int(seed),
        band=float(band),
        non_bicontextual=int(analytic.sum()),
        grid_disagreements_in_band=int((disagree & in_band).sum()),
        grid_disagreements_out_of_band=int((disagree & ~in_band).sum()),
        axis_disagreements=int((first != second).sum()),
        side_disagreements=int((sides_any != analytic).sum()),
        necessary_failures=int(necessary_bad.sum()),
        scalar_disagreements=int(scalar_bad),
        scalar_checked=k,
    )
