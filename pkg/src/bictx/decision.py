"""Deciding whether a behavior admits a model with independent sources.

A model exists iff the hyperbola ``c1*c2 = <AB>`` meets the rectangle
``[L1, R1] x [L2, R2]`` of admissible unmeasurable correlations
``c_i = <alpha_i beta_i>``. The canonical test is the product form
``(<AB> - min)(<AB> - max) <= tol_zero`` where ``min``/``max`` range over the
four rectangle corners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .behavior import (
    CONSISTENCY_TOL,
    Behavior,
    NegativityCertificate,
    PairDistribution,
    SettingTables,
    check_no_disturbance,
    pair_distribution_from_moments,
)
from .errors import ConstructionError, ContractError, DomainError, NoDisturbanceError
from .kernels import classify_scalar

TOL_ZERO = 1e-12


class Verdict(str, Enum):
    NON_BICONTEXTUAL = "NonBiContextual"
    BICONTEXTUAL = "BiContextual"


@dataclass(frozen=True)
class CorrelationBounds:
    L1: float
    R1: float
    L2: float
    R2: float

    def corners(self) -> tuple[float, float, float, float]:
        """Products ``L1*L2, L1*R2, R1*L2, R1*R2``."""
        return (self.L1 * self.L2, self.L1 * self.R2, self.R1 * self.L2, self.R1 * self.R2)

    def contains(self, c1, c2, tol=0.0) -> bool:
        return (self.L1 - tol <= c1 <= self.R1 + tol) and (self.L2 - tol <= c2 <= self.R2 + tol)


class SideResults(NamedTuple):
    """``True`` where the hyperbola crosses that side of the rectangle."""

    left: bool
    right: bool
    upper: bool
    lower: bool

    @property
    def all_violated(self) -> bool:
        return not any(self)


@dataclass(frozen=True)
class WitnessModel:
    """Factorized model: one pair distribution over ``(alpha_i, beta_i)`` per source."""

    c1: float
    c2: float
    mu1: PairDistribution
    mu2: PairDistribution

    def induced_behavior(self) -> Behavior:
        a1, b1, c1 = self.mu1.moments()
        a2, b2, c2 = self.mu2.moments()
        return Behavior(a1, a2, b1, b2, c1 * c2, mean_a=a1 * a2, mean_b=b1 * b2)

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "mu1": self.mu1.to_dict(), "mu2": self.mu2.to_dict()}


@dataclass(frozen=True)
class DecisionReport:
    verdict: Verdict
    bounds: CorrelationBounds
    product_min: float
    product_max: float
    single_lhs: float
    sides: SideResults
    necessary_bound: float
    necessary_violated: bool
    witness: Optional[WitnessModel] = None

    @property
    def bicontextual(self) -> bool:
        return self.verdict is Verdict.BICONTEXTUAL

    def to_dict(self) -> dict:
        d = {
            "verdict": self.verdict.value,
            "L1": self.bounds.L1,
            "R1": self.bounds.R1,
            "L2": self.bounds.L2,
            "R2": self.bounds.R2,
            "min": self.product_min,
            "max": self.product_max,
            "singleLHS": self.single_lhs,
            "sides": list(self.sides),
            "necessaryBound": self.necessary_bound,
            "necessaryViolated": self.necessary_violated,
        }
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d


def _classify(b: Behavior, tol_zero):
    return classify_scalar(b.alpha1, b.alpha2, b.beta1, b.beta2, b.corr_ab, tol_zero)


def compute_bounds(b: Behavior) -> CorrelationBounds:
    L1, R1, L2, R2 = _classify(b, 0.0)[:4]
    return CorrelationBounds(L1, R1, L2, R2)


def decide_single(b: Behavior, tol_zero: float = TOL_ZERO, witness: bool = True) -> DecisionReport:
    """Evaluate the product-form criterion and, if it holds, build a witness."""
    (L1, R1, L2, R2, pmin, pmax, lhs, _slack,
     left, right, upper, lower, bound, violated) = _classify(b, tol_zero)
    bounds = CorrelationBounds(L1, R1, L2, R2)
    non_bc = lhs <= tol_zero
    model = build_witness(b, bounds, tol_zero) if (non_bc and witness) else None
    return DecisionReport(
        verdict=Verdict.NON_BICONTEXTUAL if non_bc else Verdict.BICONTEXTUAL,
        bounds=bounds,
        product_min=pmin,
        product_max=pmax,
        single_lhs=lhs,
        sides=SideResults(bool(left), bool(right), bool(upper), bool(lower)),
        necessary_bound=bound,
        necessary_violated=bool(violated),
        witness=model,
    )


def decide_four_sides(b: Behavior, tol_zero: float = TOL_ZERO) -> SideResults:
    """Side-by-side crossing test, written without division.

    The left side holds iff ``<AB>`` lies in ``L1 * [L2, R2]``, and likewise
    for the other three sides. Each interval is widened by the slack that
    matches ``tol_zero`` on the product form, so "all four violated" and
    ``single_lhs > tol_zero`` coincide.
    """
    r = _classify(b, tol_zero)
    return SideResults(bool(r[8]), bool(r[9]), bool(r[10]), bool(r[11]))


def necessary_bound_check(b: Behavior, tol_zero: float = TOL_ZERO) -> tuple[float, bool]:
    """Weaker test ``|<AB>| <= min_i max(|L_i|, |R_i|)``.

    Returns ``(bound, violated)``; a violation implies bi-contextuality but
    not conversely.
    """
    r = _classify(b, tol_zero)
    return r[12], bool(r[13])


RATIO_GUARD = 1e-9
RATIO_NAMES = ("AB/L1", "AB/R1", "AB/L2", "AB/R2")


def side_ratios(corr_ab, L1, R1, L2, R2, guard: float = RATIO_GUARD) -> np.ndarray:
    """The four quotients ``<AB>/L1, <AB>/R1, <AB>/L2, <AB>/R2`` (last axis).

    A quotient whose denominator is within ``guard`` of zero is NaN; the
    decision never depends on these values.
    """
    c = np.asarray(corr_ab, dtype=float)
    den = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (L1, R1, L2, R2))), -1)
    ok = np.abs(den) > guard
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ok, c[..., None] / np.where(ok, den, 1.0), np.nan)
    return out


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


def _magnitude_range(L, R, sign):
    """Range of ``sign * c`` for ``c`` in ``[L, R]`` restricted to ``sign*c >= 0``."""
    if sign > 0:
        return max(L, 0.0), R
    return max(-R, 0.0), -L


def _hyperbola_point(c, bounds: CorrelationBounds):
    """Point of ``c1*c2 = c`` in the rectangle minimizing ``|c1| + |c2|``.

    Ties go to the candidate closest to the lower-left corner.
    """
    L1, R1, L2, R2 = bounds.L1, bounds.R1, bounds.L2, bounds.R2
    candidates = []
    if c == 0.0:
        if L1 <= 0.0 <= R1:
            candidates.append((0.0, _clamp(0.0, L2, R2)))
        if L2 <= 0.0 <= R2:
            candidates.append((_clamp(0.0, L1, R1), 0.0))
    else:
        mag = abs(c)
        root = math.sqrt(mag)
        for s1 in (-1.0, 1.0):
            s2 = s1 if c > 0 else -s1
            lo1, hi1 = _magnitude_range(L1, R1, s1)
            lo2, hi2 = _magnitude_range(L2, R2, s2)
            if hi1 <= 0.0 or hi2 <= 0.0:
                continue
            lo = max(lo1, mag / hi2)
            hi = min(hi1, mag / lo2) if lo2 > 0.0 else hi1
            if lo > hi + 1e-9:
                continue
            u = min(max(root, lo), hi)
            c1 = s1 * u
            candidates.append((c1, _clamp(c / c1, L2, R2)))
    if not candidates:
        raise ConstructionError(f"no point with c1*c2={c!r} inside {bounds}")
    best = min(abs(p) + abs(q) for p, q in candidates)
    ties = [cand for cand in candidates if abs(cand[0]) + abs(cand[1]) <= best + 1e-12]
    return min(ties, key=lambda cand: (cand[0] + cand[1], cand[0]))


def build_witness(
    b: Behavior, bounds: Optional[CorrelationBounds] = None, tol_zero: float = TOL_ZERO
) -> WitnessModel:
    """Explicit factorized model reproducing a non-bi-contextual behavior.

    Raises :class:`ContractError` when the behavior is bi-contextual.
    """
    r = _classify(b, tol_zero)
    lhs, pmin, pmax, slack = r[6], r[4], r[5], r[7]
    if lhs > tol_zero:
        raise ContractError(f"behavior is bi-contextual (single_lhs={lhs!r}); no witness exists")
    if bounds is None:
        bounds = CorrelationBounds(*r[:4])

    c1, c2 = _hyperbola_point(_clamp(b.corr_ab, pmin, pmax), bounds)
    c1 = _clamp(c1, bounds.L1, bounds.R1)
    c2 = _clamp(c2, bounds.L2, bounds.R2)
    mus = []
    for a, be, ci in ((b.alpha1, b.beta1, c1), (b.alpha2, b.beta2, c2)):
        mu = pair_distribution_from_moments(a, be, ci)
        if isinstance(mu, NegativityCertificate):
            raise ConstructionError(f"witness correlation {ci!r} gives {mu}")
        mus.append(mu)
    model = WitnessModel(c1, c2, mus[0], mus[1])

    tol = max(CONSISTENCY_TOL, 2.0 * slack)
    induced = model.induced_behavior()
    deviation = max(abs(x - y) for x, y in zip(induced.moments(), b.moments()))
    if deviation > tol:
        raise ConstructionError(f"witness reproduces the behavior only to {deviation:.3g}")
    return model


def construct_jpd(t: SettingTables, tol: float = CONSISTENCY_TOL) -> np.ndarray:
    """Joint distribution over ``(alpha1, alpha2, beta1, beta2, A, B)``.

    Glues ``p(alpha1, alpha2, A)`` and ``p(beta1, beta2, B)`` along
    ``p(A, B)``. Axis order is as listed; index 0 is outcome +1. Cells with a
    vanishing ``p(A)`` or ``p(B)`` are set to zero.
    """
    report = check_no_disturbance(t, tol)
    if not report.ok:
        raise NoDisturbanceError(report)

    def lift(table):
        # A = alpha1*alpha2 sits at index i1 XOR i2
        out = np.zeros((2, 2, 2))
        arr = table.as_array()
        for i in range(2):
            for j in range(2):
                out[i, j, i ^ j] = arr[i, j]
        return out

    la, lb = lift(t.p_alpha), lift(t.p_beta)
    p_a = la.sum(axis=(0, 1))
    p_b = lb.sum(axis=(0, 1))
    joint = t.p_joint.as_array()

    ratio = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            denom = p_a[i] * p_b[j]
            if p_a[i] <= 1e-15 or p_b[j] <= 1e-15:
                if joint[i, j] > tol:
                    raise ConstructionError(
                        f"p(A,B) has mass {joint[i, j]!r} where a marginal vanishes"
                    )
                continue
            ratio[i, j] = joint[i, j] / denom
    return np.einsum("abx,cdy,xy->abcdxy", la, lb, ratio)


def jpd_marginals(p: np.ndarray) -> dict:
    """The three measurable tables recovered from a six-variable distribution."""
    return {
        "alpha": p.sum(axis=(2, 3, 4, 5)),
        "beta": p.sum(axis=(0, 1, 4, 5)),
        "joint": p.sum(axis=(0, 1, 2, 3)),
    }


def mix_behaviors(b1: Behavior, w: float, b2: Behavior) -> Behavior:
    """Convex combination ``w*b1 + (1-w)*b2``.

    ``<A>``, ``<B>`` and tables are mixed only when both inputs carry them;
    the result can then fail the source-independence check, which is the
    expected outcome for most mixtures.
    """
    w = float(w)
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"mixing weight {w!r} is outside [0, 1]")
    if w == 1.0:
        return b1
    if w == 0.0:
        return b2

    def mix(x, y):
        return w * x + (1.0 - w) * y

    means = [mix(x, y) for x, y in zip(b1.moments(), b2.moments())]
    mean_a = mix(b1.mean_a, b2.mean_a) if b1.mean_a is not None and b2.mean_a is not None else None
    mean_b = mix(b1.mean_b, b2.mean_b) if b1.mean_b is not None and b2.mean_b is not None else None
    tables = None
    if b1.tables is not None and b2.tables is not None:
        tables = SettingTables(*(
            PairDistribution.from_array(mix(p.as_array(), q.as_array()))
            for p, q in zip(
                (b1.tables.p_alpha, b1.tables.p_beta, b1.tables.p_joint),
                (b2.tables.p_alpha, b2.tables.p_beta, b2.tables.p_joint),
            )
        ))
    return Behavior(*means, mean_a=mean_a, mean_b=mean_b, tables=tables)
