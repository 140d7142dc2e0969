"""Figure datasets: theta/phi sweeps of the test quantities and the Bloch-ball region scan.

CSV columns (sweeps), in order::

    index, param, theta, phi, alpha1, alpha2, beta1, beta2, corrAB,
    L1, R1, L2, R2, AB/L1, AB/R1, AB/L2, AB/R2, ratio_undefined,
    single_lhs, verdict

followed, when shots > 0, by ``se_<q>`` for each bootstrap quantity and
``significance``. Region CSVs hold ``x, y, z, single_lhs, verdict``.
Floats carry 17 significant digits; undefined values are written ``nan``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import _accel
from .decision import RATIO_NAMES, TOL_ZERO, Verdict, decide_single, side_ratios
from .errors import DomainError
from .kernels import classify_batch
from .quantum import SETTINGS, QubitState, ideal_behavior, sample_setting, seed_words
from .stats import QUANTITY_NAMES, CountTable, propagate_uncertainty

DEFAULT_STEPS = 181
DEFAULT_BALL_RESOLUTION = 101
DEFAULT_SURFACE_RESOLUTION = 256
DEFAULT_SWEEP_RESAMPLES = 200

BASE_COLUMNS = (
    "index", "param", "theta", "phi",
    "alpha1", "alpha2", "beta1", "beta2", "corrAB",
    "L1", "R1", "L2", "R2",
) + RATIO_NAMES + ("ratio_undefined", "single_lhs", "verdict")
SE_COLUMNS = tuple(f"se_{q}" for q in QUANTITY_NAMES) + ("significance",)
REGION_COLUMNS = ("x", "y", "z", "single_lhs", "verdict")


@dataclass(frozen=True)
class SweepSpec:
    fixed: str  # "theta" or "phi"
    fixed_value: float
    lo: float
    hi: float
    steps: int = DEFAULT_STEPS
    shots: int = 0
    seed: int = 0
    resamples: int = DEFAULT_SWEEP_RESAMPLES

    def __post_init__(self):
        if self.fixed not in ("theta", "phi"):
            raise DomainError(f"fixed must be 'theta' or 'phi', got {self.fixed!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise DomainError(f"sweep range needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.steps < 2:
            raise DomainError("steps must be at least 2")
        if self.shots < 0:
            raise DomainError("shots must be non-negative")
        if self.shots == 1:
            raise DomainError("shots must be 0 (exact) or at least 2")
        seed_words(self.seed)
        if self.fixed == "phi":
            _check_theta(self.lo)
            _check_theta(self.hi)
        else:
            _check_theta(self.fixed_value)

    @property
    def varying(self) -> str:
        return "phi" if self.fixed == "theta" else "theta"

    def params(self) -> np.ndarray:
        values = np.linspace(self.lo, self.hi, self.steps)
        values[-1] = self.hi
        return values

    def angles(self, value: float) -> tuple[float, float]:
        """``(theta, phi)`` for one value of the varying parameter."""
        if self.fixed == "theta":
            return float(self.fixed_value), float(value)
        return float(value), float(self.fixed_value)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_theta(theta):
    if not (0.0 <= theta <= math.pi / 2 + 1e-12):
        raise DomainError(f"theta={theta!r} is outside [0, pi/2]")


@dataclass(frozen=True)
class SweepTable:
    spec: SweepSpec
    columns: tuple
    rows: list

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        values = [r[k] for r in self.rows]
        return np.array(values, dtype=object if name == "verdict" else float)


def _ideal_row(index, spec, value, tol_zero):
    theta, phi = spec.angles(value)
    b = ideal_behavior(theta, phi)
    rep = decide_single(b, tol_zero, witness=False)
    return b, rep, theta, phi


def _base_row(index, value, theta, phi, moments, rep):
    bd = rep.bounds
    ratios = side_ratios(moments[4], bd.L1, bd.R1, bd.L2, bd.R2)
    undefined = bool(np.isnan(ratios).any())
    return (
        [index, float(value), theta, phi]
        + [float(m) for m in moments]
        + [bd.L1, bd.R1, bd.L2, bd.R2]
        + [float(r) for r in ratios]
        + [int(undefined), rep.single_lhs, rep.verdict.value]
    )


def _sampled_row(spec, index, value, tol_zero):
    theta, phi = spec.angles(value)
    state = QubitState(theta, phi)
    # each row owns the stream family (seed, row index)
    row_seed = seed_words(spec.seed) + [index]
    counts = CountTable.from_settings(
        sample_setting((state, state), s, spec.shots, row_seed) for s in SETTINGS
    )
    report = propagate_uncertainty(counts, spec.resamples, row_seed, tol_zero=tol_zero)
    row = _base_row(index, value, theta, phi, report.estimate.behavior.moments(), report.decision)
    sig = report.significance
    return row + [report.std_errors[q] for q in QUANTITY_NAMES] + [
        float("nan") if sig is None else sig
    ]


def run_sweep(spec: SweepSpec, threads: Optional[int] = None, tol_zero: float = TOL_ZERO) -> SweepTable:
    """Evaluate the product state ``psi (x) psi`` along one angle.

    ``shots == 0`` uses exact Born statistics; otherwise every row is sampled
    and bootstrapped independently. Output does not depend on ``threads``.
    """
    values = spec.params()
    if spec.shots == 0:
        rows = []
        for i, v in enumerate(values):
            b, rep, theta, phi = _ideal_row(i, spec, v, tol_zero)
            rows.append(_base_row(i, v, theta, phi, b.moments(), rep))
        return SweepTable(spec, BASE_COLUMNS, rows)

    work = lambda iv: _sampled_row(spec, iv[0], iv[1], tol_zero)  # noqa: E731
    n_workers = max(1, int(threads or 1))
    if n_workers == 1:
        rows = [work(iv) for iv in enumerate(values)]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            rows = list(pool.map(work, enumerate(values)))
    return SweepTable(spec, BASE_COLUMNS + SE_COLUMNS, rows)


# ---------------------------------------------------------------- region


@dataclass(frozen=True)
class RegionSpec:
    resolution: int = DEFAULT_BALL_RESOLUTION
    surface_only: bool = False

    def __post_init__(self):
        if self.resolution < 2:
            raise DomainError("resolution must be at least 2")

    def to_dict(self) -> dict:
        return asdict(self)


def ball_grid(resolution: int) -> np.ndarray:
    """Cubic grid points inside the unit ball, ``(n, 3)``.

    Coordinates ``(2i - (r-1)) / (r-1)`` are exactly antisymmetric about 0.
    """
    r = int(resolution)
    axis = (2.0 * np.arange(r) - (r - 1)) / (r - 1)
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    keep = np.einsum("ij,ij->i", pts, pts) <= 1.0 + 1e-12
    return pts[keep]


def sphere_grid(resolution: int) -> np.ndarray:
    """Angular grid on the unit sphere, ``(n, 3)``.

    Polar angles ``k*pi/r`` for ``k = 0..r`` and azimuths ``k*2pi/r`` for
    ``k = 0..r-1``; each pole appears once.
    """
    r = int(resolution)
    polar = np.arange(1, r) * math.pi / r
    azim = np.arange(r) * 2.0 * math.pi / r
    t, p = np.meshgrid(polar, azim, indexing="ij")
    st = np.sin(t)
    body = np.column_stack([(st * np.cos(p)).ravel(), (st * np.sin(p)).ravel(), np.cos(t).ravel()])
    return np.vstack([[0.0, 0.0, 1.0], body, [0.0, 0.0, -1.0]])


def region_moments(points) -> np.ndarray:
    """Behavior means of ``rho (x) rho`` from Bloch vectors: ``(x, y, y, x, z^2)``."""
    p = np.asarray(points, dtype=float)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    return np.column_stack([x, y, y, x, z * z])


@dataclass(frozen=True)
class RegionTable:
    spec: RegionSpec
    points: np.ndarray  # (n, 3)
    single_lhs: np.ndarray
    non_bicontextual: np.ndarray  # bool

    def verdicts(self) -> np.ndarray:
        return np.where(
            self.non_bicontextual, Verdict.NON_BICONTEXTUAL.value, Verdict.BICONTEXTUAL.value
        )

    def lookup(self, point, tol=1e-12) -> Optional[int]:
        """Row index of a grid point, or ``None``."""
        d = np.max(np.abs(self.points - np.asarray(point, dtype=float)), axis=1)
        k = int(np.argmin(d))
        return k if d[k] <= tol else None


def run_region(spec: RegionSpec, threads: Optional[int] = None, tol_zero: float = TOL_ZERO) -> RegionTable:
    pts = sphere_grid(spec.resolution) if spec.surface_only else ball_grid(spec.resolution)
    _accel.set_threads(threads)
    d = classify_batch(region_moments(pts), tol_zero)
    return RegionTable(spec, pts, d.single_lhs, d.non_bicontextual)


# ---------------------------------------------------------------- output


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".17g")
    return str(v)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_sidecar(path, kind: str, spec: dict, rows: int) -> Path:
    """Provenance record next to a dataset; contains no timestamps."""
    out = sidecar_path(path)
    meta = {"kind": kind, "spec": spec, "rows": rows, "file": Path(path).name}
    out.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def write_sweep(path, table: SweepTable) -> Path:
    write_csv(path, table.columns, table.rows)
    return write_sidecar(path, "sweep", table.spec.to_dict(), len(table.rows))


def region_rows(table: RegionTable):
    verdicts = table.verdicts()
    for (x, y, z), lhs, v in zip(table.points.tolist(), table.single_lhs.tolist(), verdicts.tolist()):
        yield (x, y, z, lhs, v)


def write_region(path, table: RegionTable) -> Path:
    write_csv(path, REGION_COLUMNS, region_rows(table))
    return write_sidecar(path, "region", table.spec.to_dict(), len(table.points))
