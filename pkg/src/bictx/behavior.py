"""Observable statistics of the three-setting, two-source scenario.

Outcomes are always ``+1``/``-1``. A 2x2 table is indexed with position 0 for
``+1`` and position 1 for ``-1``, and cells are named ``"++"``, ``"+-"``,
``"-+"``, ``"--"`` (first variable, second variable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, NoDisturbanceError, SourceDependenceError

PROB_TOL = 1e-12
CONSISTENCY_TOL = 1e-9

OUTCOMES = (1, -1)
CELL_KEYS = ("++", "+-", "-+", "--")
_CELL_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _check_unit(name, value, tol=PROB_TOL):
    value = float(value)
    if not math.isfinite(value) or abs(value) > 1.0 + tol:
        raise DomainError(f"{name}={value!r} is outside [-1, 1]")
    return value


@dataclass(frozen=True)
class PairDistribution:
    """Joint distribution of two +/-1 variables ``Q`` and ``R``."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self):
        for name in ("p_pp", "p_pm", "p_mp", "p_mm"):
            object.__setattr__(self, name, float(getattr(self, name)))
        cells = self.cells()
        if any(not math.isfinite(p) or p < -PROB_TOL for p in cells):
            raise DomainError(f"negative or non-finite probability in {cells}")
        if abs(sum(cells) - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {sum(cells)!r}, not 1")

    def cells(self) -> tuple[float, float, float, float]:
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)

    def as_array(self) -> np.ndarray:
        return np.array([[self.p_pp, self.p_pm], [self.p_mp, self.p_mm]])

    @classmethod
    def from_array(cls, arr) -> "PairDistribution":
        arr = np.asarray(arr, dtype=float).reshape(2, 2)
        return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 0]), float(arr[1, 1]))

    @classmethod
    def uniform(cls) -> "PairDistribution":
        return cls(0.25, 0.25, 0.25, 0.25)

    def moments(self) -> tuple[float, float, float]:
        return moments_from_pair_distribution(self)

    def marginal_product(self) -> tuple[float, float]:
        """Probabilities that ``Q*R`` equals +1 and -1."""
        return (self.p_pp + self.p_mm, self.p_pm + self.p_mp)

    def marginal_first(self) -> tuple[float, float]:
        return (self.p_pp + self.p_pm, self.p_mp + self.p_mm)

    def marginal_second(self) -> tuple[float, float]:
        return (self.p_pp + self.p_mp, self.p_pm + self.p_mm)

    def to_dict(self) -> dict:
        return dict(zip(CELL_KEYS, self.cells()))

    @classmethod
    def from_dict(cls, d) -> "PairDistribution":
        missing = [k for k in CELL_KEYS if k not in d]
        if missing:
            raise DomainError(f"pair distribution is missing cells {missing}")
        return cls(*(float(d[k]) for k in CELL_KEYS))


@dataclass(frozen=True)
class NegativityCertificate:
    """Moments whose would-be pair distribution has a negative cell.

    ``cell`` is the ``(q, r)`` outcome pair with the most negative value.
    """

    cell: tuple[int, int]
    value: float
    cells: dict
    moments: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "cell": "".join("+" if s > 0 else "-" for s in self.cell),
            "value": self.value,
            "cells": dict(self.cells),
            "moments": list(self.moments),
        }


def pair_cells(mean_q, mean_r, corr_qr):
    """Raw values ``(1 + q*<Q> + r*<R> + q*r*<QR>)/4`` for the four cells."""
    return tuple(
        0.25 * (1.0 + q * mean_q + r * mean_r + q * r * corr_qr) for q, r in _CELL_SIGNS
    )


def pair_distribution_from_moments(
    mean_q: float, mean_r: float, corr_qr: float, tol: float = PROB_TOL
) -> Union[PairDistribution, NegativityCertificate]:
    """Build the unique 2x2 table with the given means and correlation.

    Returns a :class:`NegativityCertificate` instead when some cell is below
    ``-tol``. Cells in ``[-tol, 0)`` are rounding noise and are set to 0.
    """
    mean_q = _check_unit("mean_q", mean_q)
    mean_r = _check_unit("mean_r", mean_r)
    corr_qr = _check_unit("corr_qr", corr_qr)
    raw = pair_cells(mean_q, mean_r, corr_qr)
    worst = min(range(4), key=lambda k: raw[k])
    if raw[worst] < -tol:
        return NegativityCertificate(
            cell=_CELL_SIGNS[worst],
            value=raw[worst],
            cells=dict(zip(CELL_KEYS, raw)),
            moments=(mean_q, mean_r, corr_qr),
        )
    return PairDistribution(*(max(p, 0.0) for p in raw))


def moments_from_pair_distribution(d: PairDistribution) -> tuple[float, float, float]:
    """Return ``(<Q>, <R>, <QR>)`` of a pair distribution."""
    pp, pm, mp, mm = d.cells()
    return (pp + pm - mp - mm, pp - pm + mp - mm, pp - pm - mp + mm)


def moments_feasible(mean_q, mean_r, corr_qr) -> bool:
    """Closed-form non-negativity condition on the three moments."""
    return abs(mean_q + mean_r) - 1.0 <= corr_qr <= 1.0 - abs(mean_q - mean_r)


@dataclass(frozen=True)
class SettingTables:
    """Outcome tables of the three measurement settings.

    ``p_alpha`` is over ``(alpha1, alpha2)``, ``p_beta`` over ``(beta1, beta2)``
    and ``p_joint`` over ``(A, B)``.
    """

    p_alpha: PairDistribution
    p_beta: PairDistribution
    p_joint: PairDistribution

    def to_dict(self) -> dict:
        return {
            "alpha": self.p_alpha.to_dict(),
            "beta": self.p_beta.to_dict(),
            "joint": self.p_joint.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "SettingTables":
        try:
            return cls(
                PairDistribution.from_dict(d["alpha"]),
                PairDistribution.from_dict(d["beta"]),
                PairDistribution.from_dict(d["joint"]),
            )
        except KeyError as exc:
            raise DomainError(f"tables are missing setting {exc}") from None

    @classmethod
    def uniform(cls) -> "SettingTables":
        u = PairDistribution.uniform()
        return cls(u, u, u)


@dataclass(frozen=True)
class DisturbanceViolation:
    product: str  # "A" or "B"
    outcome: int
    local_sum: float
    joint_sum: float

    @property
    def deviation(self) -> float:
        return abs(self.local_sum - self.joint_sum)


@dataclass(frozen=True)
class NoDisturbanceReport:
    tol: float
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return f"no-disturbance holds at tol={self.tol:g}"
        parts = [
            f"p({v.product}={v.outcome:+d}): local {v.local_sum:.12g} vs joint "
            f"{v.joint_sum:.12g} (deviation {v.deviation:.3g})"
            for v in self.violations
        ]
        return "no-disturbance violated: " + "; ".join(parts)


def check_no_disturbance(t: SettingTables, tol: float = CONSISTENCY_TOL) -> NoDisturbanceReport:
    """Compare ``p(A)``, ``p(B)`` from the local tables with the joint table."""
    joint = t.p_joint
    pairs = (
        ("A", t.p_alpha.marginal_product(), joint.marginal_first()),
        ("B", t.p_beta.marginal_product(), joint.marginal_second()),
    )
    violations = []
    for name, local, shared in pairs:
        for k, outcome in enumerate(OUTCOMES):
            v = DisturbanceViolation(name, outcome, local[k], shared[k])
            if v.deviation > tol:
                violations.append(v)
    return NoDisturbanceReport(tol, tuple(violations))


@dataclass(frozen=True)
class Behavior:
    """The five measurable means, optionally with the full setting tables.

    ``mean_a`` and ``mean_b`` are ``<A>`` and ``<B>``; when given they must
    factorize as ``alpha1*alpha2`` and ``beta1*beta2``.
    """

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    corr_ab: float
    mean_a: Optional[float] = None
    mean_b: Optional[float] = None
    tables: Optional[SettingTables] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2", "corr_ab"):
            object.__setattr__(self, name, _check_unit(name, getattr(self, name)))
        for name in ("mean_a", "mean_b"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _check_unit(name, value))

        if self.tables is not None:
            derived = _means_from_tables(self.tables)
            for name, value in derived.items():
                stored = getattr(self, name)
                if stored is None:
                    object.__setattr__(self, name, value)
                elif abs(stored - value) > CONSISTENCY_TOL:
                    raise DomainError(
                        f"{name}={stored!r} disagrees with tables ({value!r})"
                    )

        if self.mean_a is not None and abs(self.mean_a - self.alpha1 * self.alpha2) > CONSISTENCY_TOL:
            raise SourceDependenceError(
                f"<A>={self.mean_a!r} but <alpha1><alpha2>={self.alpha1 * self.alpha2!r}"
            )
        if self.mean_b is not None and abs(self.mean_b - self.beta1 * self.beta2) > CONSISTENCY_TOL:
            raise SourceDependenceError(
                f"<B>={self.mean_b!r} but <beta1><beta2>={self.beta1 * self.beta2!r}"
            )

    def moments(self) -> tuple[float, float, float, float, float]:
        return (self.alpha1, self.alpha2, self.beta1, self.beta2, self.corr_ab)

    def to_dict(self) -> dict:
        d = {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "corrAB": self.corr_ab,
        }
        if self.mean_a is not None:
            d["meanA"] = self.mean_a
        if self.mean_b is not None:
            d["meanB"] = self.mean_b
        if self.tables is not None:
            d["tables"] = self.tables.to_dict()
        return d

    @classmethod
    def from_dict(cls, d) -> "Behavior":
        if not isinstance(d, dict):
            raise DomainError("behavior must be a JSON object")
        missing = [k for k in ("alpha1", "alpha2", "beta1", "beta2", "corrAB") if k not in d]
        if missing:
            raise DomainError(f"behavior is missing fields {missing}")
        tables = SettingTables.from_dict(d["tables"]) if d.get("tables") is not None else None
        try:
            return cls(
                float(d["alpha1"]),
                float(d["alpha2"]),
                float(d["beta1"]),
                float(d["beta2"]),
                float(d["corrAB"]),
                mean_a=None if d.get("meanA") is None else float(d["meanA"]),
                mean_b=None if d.get("meanB") is None else float(d["meanB"]),
                tables=tables,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(str(exc)) from None


def _means_from_tables(t: SettingTables) -> dict:
    a1, a2, ma = t.p_alpha.moments()
    b1, b2, mb = t.p_beta.moments()
    _, _, cab = t.p_joint.moments()
    return {
        "alpha1": a1,
        "alpha2": a2,
        "beta1": b1,
        "beta2": b2,
        "corr_ab": cab,
        "mean_a": ma,
        "mean_b": mb,
    }


def behavior_from_tables(t: SettingTables, tol: float = CONSISTENCY_TOL) -> Behavior:
    """Read all means off the tables after checking no-disturbance.

    Raises :class:`NoDisturbanceError` when the shared marginals disagree and
    :class:`SourceDependenceError` when ``<A> != <alpha1><alpha2>``.
    """
    report = check_no_disturbance(t, tol)
    if not report.ok:
        raise NoDisturbanceError(report)
    m = _means_from_tables(t)
    return Behavior(
        m["alpha1"], m["alpha2"], m["beta1"], m["beta2"], m["corr_ab"],
        mean_a=m["mean_a"], mean_b=m["mean_b"], tables=t,
    )
