"""Outcome counts to behaviors, with bootstrap error bars on the test quantities."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import _accel
from .behavior import CELL_KEYS, Behavior
from .decision import RATIO_NAMES, TOL_ZERO, DecisionReport, decide_single, side_ratios
from .errors import DomainError
from .kernels import classify_batch
from .quantum import SETTINGS, Setting, SettingCounts, seed_words

MIN_RESAMPLES = 100
MEAN_NAMES = ("alpha1", "alpha2", "beta1", "beta2", "corrAB")

# rows of the sign matrix map the four cells (++, +-, -+, --) to a mean
_FIRST = np.array([1, 1, -1, -1])
_SECOND = np.array([1, -1, 1, -1])
_PRODUCT = _FIRST * _SECOND


@dataclass(frozen=True)
class CountTable:
    """Outcome counts per setting in ``CELL_KEYS`` order.

    The joint setting counts ``(A, B)`` label pairs.
    """

    alpha: tuple
    beta: tuple
    joint: tuple

    def __post_init__(self):
        for s in SETTINGS:
            counts = tuple(int(n) for n in getattr(self, s.value))
            if len(counts) != 4:
                raise DomainError(f"{s.value}: expected 4 counts, got {len(counts)}")
            if any(n < 0 for n in counts):
                raise DomainError(f"{s.value}: counts must be non-negative")
            object.__setattr__(self, s.value, counts)

    def shots(self, setting) -> int:
        return sum(getattr(self, Setting(setting).value))

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.joint], dtype=np.int64)

    @classmethod
    def from_settings(cls, records) -> "CountTable":
        by_setting = {}
        for rec in records:
            if rec.setting in by_setting:
                raise DomainError(f"duplicate counts for setting {rec.setting.value}")
            by_setting[rec.setting] = rec.counts
        missing = [s.value for s in SETTINGS if s not in by_setting]
        if missing:
            raise DomainError(f"no counts for setting(s): {', '.join(missing)}")
        return cls(*(by_setting[s] for s in SETTINGS))

    def settings(self) -> list:
        return [SettingCounts(s, getattr(self, s.value)) for s in SETTINGS]

    def to_dict(self) -> dict:
        return {"settings": [r.to_dict() for r in self.settings()]}

    @classmethod
    def from_dict(cls, d) -> "CountTable":
        """Accept ``{"settings": [...]}`` or a bare list of setting records."""
        records = d.get("settings") if isinstance(d, dict) else d
        if not isinstance(records, list):
            raise DomainError("counts JSON must be a list of setting records")
        return cls.from_settings(SettingCounts.from_dict(r) for r in records)


def _parse_outcome(text: str, line: int) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        value = 0
    if value not in (1, -1):
        raise DomainError(f"line {line}: outcome {text!r} is not +1 or -1")
    return value


def read_shots_csv(path) -> CountTable:
    """Aggregate per-shot records with header ``setting,o1,o2``."""
    counts = {s: [0, 0, 0, 0] for s in SETTINGS}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["setting", "o1", "o2"]:
            raise DomainError(f"{path}: header must be 'setting,o1,o2'")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DomainError(f"line {line}: expected 3 fields, got {len(row)}")
            try:
                setting = Setting(row[0].strip())
            except ValueError:
                raise DomainError(f"line {line}: unknown setting {row[0]!r}") from None
            o1, o2 = _parse_outcome(row[1], line), _parse_outcome(row[2], line)
            counts[setting][CELL_KEYS.index(("+" if o1 > 0 else "-") + ("+" if o2 > 0 else "-"))] += 1
    return CountTable(*(counts[s] for s in SETTINGS))


def write_shots_csv(path, outcomes: dict) -> None:
    """Write per-shot outcome indices (``{setting: index array}``) as CSV."""
    signs = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["setting", "o1", "o2"])
        for s in SETTINGS:
            for k in outcomes.get(s, ()):
                o1, o2 = signs[int(k)]
                w.writerow([s.value, f"{o1:+d}", f"{o2:+d}"])


def read_counts_json(path) -> CountTable:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})") from None
    return CountTable.from_dict(data)


def load_counts(path) -> CountTable:
    """Dispatch on the file suffix: ``.csv`` per-shot records, otherwise JSON counts."""
    return read_shots_csv(path) if str(path).lower().endswith(".csv") else read_counts_json(path)


# ---------------------------------------------------------------- estimation


def moments_from_counts(counts) -> np.ndarray:
    """Five means from a ``(..., 3, 4)`` count array; the last axis is ``CELL_KEYS``."""
    counts = np.asarray(counts)
    n = counts.sum(axis=-1)
    a, b, j = counts[..., 0, :], counts[..., 1, :], counts[..., 2, :]
    # integer numerators keep each mean a single correctly rounded division
    out = np.stack(
        [
            (a @ _FIRST) / n[..., 0],
            (a @ _SECOND) / n[..., 0],
            (b @ _FIRST) / n[..., 1],
            (b @ _SECOND) / n[..., 1],
            (j @ _PRODUCT) / n[..., 2],
        ],
        axis=-1,
    )
    return out


def mean_standard_error(m: float, n: int) -> float:
    """``sqrt((1 - m^2) / (n - 1))`` for a mean of ``n`` outcomes in {+1, -1}."""
    return math.sqrt(max(0.0, 1.0 - m * m) / (n - 1))


@dataclass(frozen=True)
class Estimate:
    behavior: Behavior
    std_errors: dict  # keyed by MEAN_NAMES
    shots: dict  # keyed by setting name
    mean_a_gap: float  # joint <A> minus <alpha1><alpha2>
    mean_b_gap: float

    def to_dict(self) -> dict:
        return {
            "behavior": self.behavior.to_dict(),
            "stdErrors": dict(self.std_errors),
            "shots": dict(self.shots),
            "meanAGap": self.mean_a_gap,
            "meanBGap": self.mean_b_gap,
        }


def estimate_behavior(c: CountTable) -> Estimate:
    """Empirical means with analytic standard errors.

    The behavior is moments-only: finite-shot estimates of ``<A>`` never
    match ``<alpha1><alpha2>`` exactly, so the gaps are reported instead.
    """
    arr = c.as_array()
    shots = arr.sum(axis=1)
    for s, n in zip(SETTINGS, shots):
        if n < 2:
            raise DomainError(f"setting {s.value} has {int(n)} shot(s); at least 2 are needed")
    m = moments_from_counts(arr)
    b = Behavior(*(float(v) for v in m))
    ns = (shots[0], shots[0], shots[1], shots[1], shots[2])
    ses = {name: mean_standard_error(float(v), int(n)) for name, v, n in zip(MEAN_NAMES, m, ns)}
    j = arr[2]
    mean_a = float(j @ _FIRST) / shots[2]
    mean_b = float(j @ _SECOND) / shots[2]
    return Estimate(
        behavior=b,
        std_errors=ses,
        shots={s.value: int(n) for s, n in zip(SETTINGS, shots)},
        mean_a_gap=mean_a - b.alpha1 * b.alpha2,
        mean_b_gap=mean_b - b.beta1 * b.beta2,
    )


# ---------------------------------------------------------------- bootstrap

QUANTITY_NAMES = ("L1", "R1", "L2", "R2") + RATIO_NAMES + ("singleLHS",)


def _quantities(moments: np.ndarray, tol_zero: float) -> np.ndarray:
    """``(n, 9)`` array of bounds, guarded ratios and single_lhs."""
    d = classify_batch(moments, tol_zero)
    ratios = side_ratios(moments[:, 4], d.L1, d.R1, d.L2, d.R2)
    return np.column_stack([d.L1, d.R1, d.L2, d.R2, ratios, d.single_lhs])


def bootstrap_counts(c: CountTable, resamples: int, seed: int) -> np.ndarray:
    """``(resamples, 3, 4)`` multinomial resamples of each setting's counts.

    Resample ``r`` draws from its own stream seeded by ``(seed, r)``.
    """
    words = seed_words(seed)
    arr = c.as_array()
    shots = arr.sum(axis=1)
    probs = arr / shots[:, None]
    out = np.empty((int(resamples), 3, 4), dtype=np.int64)
    for r in range(int(resamples)):
        rng = np.random.default_rng(words + [r])
        for k in range(3):
            out[r, k] = rng.multinomial(shots[k], probs[k])
    return out


@dataclass(frozen=True)
class UncertainReport:
    decision: DecisionReport
    estimate: Estimate
    quantities: dict  # point values keyed by QUANTITY_NAMES (NaN for undefined ratios)
    std_errors: dict  # bootstrap SEs keyed by QUANTITY_NAMES
    resamples: int
    seed: Optional[object]

    @property
    def significance(self) -> Optional[float]:
        se = self.std_errors["singleLHS"]
        if not se > 0:
            return None
        return self.quantities["singleLHS"] / se

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or math.isnan(x) else x

        return {
            "verdict": self.decision.verdict.value,
            "decision": self.decision.to_dict(),
            "estimate": self.estimate.to_dict(),
            "quantities": {k: num(v) for k, v in self.quantities.items()},
            "stdErrors": {k: num(v) for k, v in self.std_errors.items()},
            "significance": self.significance,
            "resamples": self.resamples,
            "seed": self.seed,
        }


def _seed_json(seed):
    words = seed_words(seed)
    return words[0] if len(words) == 1 else words


def _point_quantities(b: Behavior, tol_zero) -> dict:
    q = _quantities(np.array([b.moments()]), tol_zero)[0]
    return {k: float(v) for k, v in zip(QUANTITY_NAMES, q)}


def propagate_uncertainty(
    c: CountTable,
    resamples: int = 1000,
    seed: int = 0,
    threads: Optional[int] = None,
    tol_zero: float = TOL_ZERO,
) -> UncertainReport:
    """Nonparametric bootstrap over settings, treated as independent runs.

    Standard errors are sample standard deviations (``ddof=1``) of each
    quantity across resamples; resamples where a ratio is undefined are
    skipped for that ratio. ``threads`` bounds kernel parallelism only.
    """
    if resamples < MIN_RESAMPLES:
        raise DomainError(f"resamples must be at least {MIN_RESAMPLES}, got {resamples}")
    est = estimate_behavior(c)
    boot = bootstrap_counts(c, resamples, seed)
    _accel.set_threads(threads)
    q = _quantities(moments_from_counts(boot), tol_zero)
    ses = {}
    for k, name in enumerate(QUANTITY_NAMES):
        col = q[:, k]
        col = col[~np.isnan(col)]
        ses[name] = float(np.std(col, ddof=1)) if col.size >= 2 else float("nan")
    return UncertainReport(
        decision=decide_single(est.behavior, tol_zero),
        estimate=est,
        quantities=_point_quantities(est.behavior, tol_zero),
        std_errors=ses,
        resamples=int(resamples),
        seed=_seed_json(seed),
    )


def exact_report(b: Behavior, tol_zero: float = TOL_ZERO) -> UncertainReport:
    """Report for exactly known means: every standard error is zero."""
    est = Estimate(
        behavior=Behavior(*b.moments()),
        std_errors={name: 0.0 for name in MEAN_NAMES},
        shots={s.value: 0 for s in SETTINGS},
        mean_a_gap=(b.mean_a - b.alpha1 * b.alpha2) if b.mean_a is not None else 0.0,
        mean_b_gap=(b.mean_b - b.beta1 * b.beta2) if b.mean_b is not None else 0.0,
    )
    quantities = _point_quantities(b, tol_zero)
    ses = {k: (float("nan") if math.isnan(v) else 0.0) for k, v in quantities.items()}
    return UncertainReport(decide_single(b, tol_zero), est, quantities, ses, 0, None)
