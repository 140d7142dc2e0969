"""Two-qubit realization: Pauli algebra, product states, joint basis, sampling.

The default measurement assignment is

    alpha1 = X(x)1, alpha2 = 1(x)Y, beta1 = Y(x)1, beta2 = 1(x)X,
    A = X(x)Y,      B = Y(x)X,      AB = Z(x)Z

and A, B are read jointly in the rotated Bell basis that diagonalizes both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .behavior import (
    CELL_KEYS,
    Behavior,
    PairDistribution,
    SettingTables,
    behavior_from_tables,
)
from .errors import DomainError

HERMITIAN_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def pauli(label: str) -> np.ndarray:
    """Two-qubit Pauli product from a label such as ``"XY"`` or ``"IZ"``."""
    if len(label) != 2 or any(ch not in PAULI for ch in label):
        raise DomainError(f"bad two-qubit Pauli label {label!r}")
    return np.kron(PAULI[label[0]], PAULI[label[1]])


def is_hermitian(op, tol=HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    return op.shape[0] == op.shape[1] and np.max(np.abs(op - op.conj().T)) <= tol


@dataclass(frozen=True)
class QubitState:
    """Pure state ``cos(theta)|0> + sin(theta) e^{i phi}|1>``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        if not (-1e-12 <= theta <= math.pi / 2 + 1e-12):
            raise DomainError(f"theta={theta!r} is outside [0, pi/2]")
        if not math.isfinite(self.phi):
            raise DomainError(f"phi={self.phi!r} is not finite")
        object.__setattr__(self, "theta", min(max(theta, 0.0), math.pi / 2))
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array(
            [math.cos(self.theta), math.sin(self.theta) * np.exp(1j * self.phi)], dtype=complex
        )

    def bloch(self) -> tuple[float, float, float]:
        s = math.sin(2.0 * self.theta)
        return (s * math.cos(self.phi), s * math.sin(self.phi), math.cos(2.0 * self.theta))

    @classmethod
    def from_bloch(cls, x, y, z) -> "QubitState":
        norm = math.sqrt(x * x + y * y + z * z)
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"Bloch vector has norm {norm!r}; pure states need 1")
        theta = 0.5 * math.acos(max(-1.0, min(1.0, z / norm)))
        return cls(theta, math.atan2(y, x))


def product_state(state1: QubitState, state2: QubitState) -> np.ndarray:
    return np.kron(state1.amplitudes, state2.amplitudes)


def expectation(state1: QubitState, state2: QubitState, obs) -> float:
    """``<psi1 (x) psi2 | obs | psi1 (x) psi2>`` for a Hermitian 4x4 ``obs``."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (4, 4):
        raise DomainError(f"observable must be 4x4, got {obs.shape}")
    if not is_hermitian(obs):
        raise DomainError("observable is not Hermitian")
    psi = product_state(state1, state2)
    value = np.vdot(psi, obs @ psi)
    assert abs(value.imag) <= 1e-12, value
    return float(value.real)


@dataclass(frozen=True)
class Assignment:
    """Pauli labels for the four individual properties.

    ``A`` and ``B`` are the products ``alpha1*alpha2`` and ``beta1*beta2``.
    """

    name: str
    alpha1: str
    alpha2: str
    beta1: str
    beta2: str

    def operator(self, which: str) -> np.ndarray:
        if which == "A":
            return pauli(self.alpha1) @ pauli(self.alpha2)
        if which == "B":
            return pauli(self.beta1) @ pauli(self.beta2)
        return pauli(getattr(self, which))


STANDARD = Assignment("standard", "XI", "IY", "YI", "IX")
# A = X(x)X, B = Y(x)Y; read jointly in the ordinary Bell basis
PARALLEL = Assignment("parallel", "XI", "IX", "YI", "IY")
ASSIGNMENTS = {a.name: a for a in (STANDARD, PARALLEL)}


@dataclass(frozen=True)
class MeasurementBasis:
    """Orthonormal joint eigenbasis of ``A`` and ``B`` with derived labels.

    ``labels[k]`` is ``(a, b, ab)``: eigenvalues of ``A``, ``B`` and ``A B``
    on ``vectors[k]``.
    """

    vectors: np.ndarray  # (4, 4), one basis vector per row
    labels: tuple

    def probabilities(self, psi) -> np.ndarray:
        amps = self.vectors.conj() @ psi
        return np.abs(amps) ** 2

    def projector_sum(self) -> np.ndarray:
        return sum(np.outer(v, v.conj()) for v in self.vectors)


def _eigenvalue(op, v):
    w = op @ v
    lam = np.vdot(v, w)
    if np.max(np.abs(w - lam * v)) > 1e-12 or abs(lam.imag) > 1e-12:
        raise AssertionError("basis vector is not an eigenvector")
    lam = lam.real
    if abs(abs(lam) - 1.0) > 1e-12:
        raise AssertionError(f"eigenvalue {lam} is not +/-1")
    return 1 if lam > 0 else -1


def _labelled_basis(vectors, assignment: Assignment) -> MeasurementBasis:
    vectors = np.asarray(vectors, dtype=complex)
    gram = vectors.conj() @ vectors.T
    if np.max(np.abs(gram - np.eye(4))) > 1e-12:
        raise AssertionError("basis is not orthonormal")
    op_a, op_b = assignment.operator("A"), assignment.operator("B")
    labels = []
    for v in vectors:
        a, b, ab = _eigenvalue(op_a, v), _eigenvalue(op_b, v), _eigenvalue(op_a @ op_b, v)
        if a * b != ab:
            raise AssertionError("labels inconsistent with A*B")
        labels.append((a, b, ab))
    return MeasurementBasis(vectors, tuple(labels))


_S = 1.0 / math.sqrt(2.0)


def ms_basis() -> MeasurementBasis:
    """Rotated Bell basis produced by a Molmer-Sorensen interaction.

    Vectors ``(|00>+i|11>)``, ``(|11>+i|00>)``, ``(|01>-i|10>)``,
    ``(|10>-i|01>)`` (all over sqrt 2); labels are computed, not stored.
    """
    vecs = _S * np.array(
        [
            [1, 0, 0, 1j],
            [1j, 0, 0, 1],
            [0, 1, -1j, 0],
            [0, -1j, 1, 0],
        ],
        dtype=complex,
    )
    return _labelled_basis(vecs, STANDARD)


def bell_basis() -> MeasurementBasis:
    """Ordinary Bell basis, the joint eigenbasis of ``X(x)X`` and ``Y(x)Y``."""
    vecs = _S * np.array(
        [[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]], dtype=complex
    )
    return _labelled_basis(vecs, PARALLEL)


def joint_basis(assignment: Assignment = STANDARD) -> MeasurementBasis:
    return ms_basis() if assignment.name == "standard" else bell_basis()


# Eigenvalue triples (X(x)Y, Y(x)X, Z(x)Z) as printed in an external write-up
# of this basis; rows 2 and 4 violate (X(x)Y)(Y(x)X) = Z(x)Z.
PRINTED_MS_LABELS = ((1, 1, 1), (1, -1, 1), (1, -1, -1), (-1, -1, -1))


def label_discrepancies(basis: MeasurementBasis, printed=PRINTED_MS_LABELS) -> list:
    """Rows where a printed label triple differs from the derived one."""
    out = []
    for k, (derived, given) in enumerate(zip(basis.labels, printed)):
        if tuple(derived) != tuple(given):
            out.append({
                "vector": k + 1,
                "derived": list(derived),
                "printed": list(given),
                "printed_consistent": given[0] * given[1] == given[2],
            })
    return out


# ---------------------------------------------------------------- settings


class Setting(str, Enum):
    ALPHA = "alpha"
    BETA = "beta"
    JOINT = "joint"

    @property
    def index(self) -> int:
        return ("alpha", "beta", "joint").index(self.value)


SETTINGS = (Setting.ALPHA, Setting.BETA, Setting.JOINT)
_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _local_probabilities(psi, op1, op2) -> np.ndarray:
    """Born probabilities of the four outcome pairs of two commuting +/-1 observables."""
    eye = np.eye(4)
    probs = np.empty(4)
    for k, (s1, s2) in enumerate(_SIGNS):
        proj = 0.25 * (eye + s1 * op1) @ (eye + s2 * op2)
        probs[k] = np.vdot(psi, proj @ psi).real
    return probs


def setting_probabilities(
    state1: QubitState, state2: QubitState, setting, assignment: Assignment = STANDARD
) -> np.ndarray:
    """Exact outcome probabilities in ``CELL_KEYS`` order for one setting.

    For the joint setting the outcome pair is ``(A, B)``.
    """
    setting = Setting(setting)
    psi = product_state(state1, state2)
    if setting is Setting.ALPHA:
        probs = _local_probabilities(psi, pauli(assignment.alpha1), pauli(assignment.alpha2))
    elif setting is Setting.BETA:
        probs = _local_probabilities(psi, pauli(assignment.beta1), pauli(assignment.beta2))
    else:
        basis = joint_basis(assignment)
        pv = basis.probabilities(psi)
        probs = np.zeros(4)
        for p, (a, b, _) in zip(pv, basis.labels):
            probs[_SIGNS.index((a, b))] += p
    probs = np.where(np.abs(probs) < 1e-15, 0.0, probs)
    return probs / probs.sum()


def behavior_for_states(
    state1: QubitState, state2: QubitState, assignment: Assignment = STANDARD
) -> Behavior:
    """Behavior (with tables) of the product state ``state1 (x) state2``."""
    tables = SettingTables(*(
        PairDistribution(*setting_probabilities(state1, state2, s, assignment)) for s in SETTINGS
    ))
    return behavior_from_tables(tables)


def ideal_behavior(theta: float, phi: float, assignment: Assignment = STANDARD) -> Behavior:
    """Exact behavior of ``|psi>(x)|psi>`` with ``psi = cos t|0> + sin t e^{i p}|1>``."""
    s = QubitState(theta, phi)
    return behavior_for_states(s, s, assignment)


def ideal_moments(theta, phi):
    """Closed-form ``(alpha1, alpha2, beta1, beta2, corrAB)`` arrays for the standard assignment.

    Vectorized over ``theta`` and ``phi``; used by sweeps.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(2.0 * theta)
    x = s * np.cos(phi)
    y = s * np.sin(phi)
    zz = np.cos(2.0 * theta) ** 2
    x, y, zz = np.broadcast_arrays(x, y, zz)
    return np.stack([x, y, y, x, zz], axis=-1)


# ---------------------------------------------------------------- sampling


def seed_words(seed) -> list:
    """Entropy words for an integer seed or a tuple of integers, all >= 0."""
    words = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    if not words or any(int(w) != w or w < 0 for w in words):
        raise DomainError(f"seed must be a non-negative integer (or tuple of them), got {seed!r}")
    return [int(w) for w in words]


def setting_rng(seed, setting) -> np.random.Generator:
    """Independent stream for one setting, derived from ``(seed, setting index)``."""
    return np.random.default_rng(seed_words(seed) + [Setting(setting).index])


@dataclass(frozen=True)
class SettingCounts:
    setting: Setting
    counts: tuple  # in CELL_KEYS order

    @property
    def shots(self) -> int:
        return int(sum(self.counts))

    def to_dict(self) -> dict:
        return {
            "setting": self.setting.value,
            "shots": self.shots,
            "counts": {k: int(n) for k, n in zip(CELL_KEYS, self.counts)},
        }

    @classmethod
    def from_dict(cls, d) -> "SettingCounts":
        try:
            setting = Setting(d["setting"])
            counts = tuple(int(d["counts"][k]) for k in CELL_KEYS)
        except (KeyError, ValueError, TypeError) as exc:
            raise DomainError(f"malformed counts record: {exc}") from None
        if any(n < 0 for n in counts):
            raise DomainError("counts must be non-negative")
        if "shots" in d and int(d["shots"]) != sum(counts):
            raise DomainError(f"{setting.value}: counts sum to {sum(counts)}, shots={d['shots']}")
        return cls(setting, counts)


def sample_outcomes(
    states, setting, shots: int, seed: int, assignment: Assignment = STANDARD
) -> np.ndarray:
    """Per-shot outcome indices (into ``CELL_KEYS``) drawn i.i.d. from the Born rule."""
    if shots < 1:
        raise DomainError("shots must be at least 1")
    state1, state2 = states
    probs = setting_probabilities(state1, state2, setting, assignment)
    return setting_rng(seed, setting).choice(4, size=int(shots), p=probs)


def sample_setting(
    states, setting, shots: int, seed: int, assignment: Assignment = STANDARD
) -> SettingCounts:
    """Outcome counts of ``shots`` independent runs of one setting."""
    idx = sample_outcomes(states, setting, shots, seed, assignment)
    return SettingCounts(Setting(setting), tuple(int(n) for n in np.bincount(idx, minlength=4)))


# ---------------------------------------------------------------- Mermin-Peres


MERMIN_PERES_SQUARE = (
    ("XI", "IX", "XX"),
    ("IY", "YI", "YY"),
    ("XY", "YX", "ZZ"),
)


def _product(labels) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    for lab in labels:
        out = out @ pauli(lab)
    return out


def _sign_of_identity(op, tol=1e-12) -> Optional[int]:
    for sign in (1, -1):
        if np.max(np.abs(op - sign * np.eye(4))) <= tol:
            return sign
    return None


@dataclass(frozen=True)
class MerminPeresReport:
    row_products: tuple
    column_products: tuple
    max_commutator: float
    contexts_commute: bool
    bicontextual_subset: tuple
    subset_matches_assignment: bool
    ms_label_discrepancies: tuple

    @property
    def ok(self) -> bool:
        return (
            self.contexts_commute
            and self.row_products == (1, 1, 1)
            and self.column_products == (1, 1, -1)
            and self.subset_matches_assignment
        )

    def to_dict(self) -> dict:
        return {
            "square": [list(r) for r in MERMIN_PERES_SQUARE],
            "rowProducts": list(self.row_products),
            "columnProducts": list(self.column_products),
            "maxCommutator": self.max_commutator,
            "contextsCommute": self.contexts_commute,
            "biContextualSubset": [list(c) for c in self.bicontextual_subset],
            "subsetMatchesAssignment": self.subset_matches_assignment,
            "msLabelDiscrepancies": list(self.ms_label_discrepancies),
            "ok": self.ok,
        }


def verify_mermin_peres() -> MerminPeresReport:
    """Check commutation and product rules of the 3x3 square.

    The products are expected to be ``+1`` for all rows and the first two
    columns and ``-1`` for column 3.
    """
    square = MERMIN_PERES_SQUARE
    rows = [list(r) for r in square]
    cols = [[square[i][j] for i in range(3)] for j in range(3)]
    worst = 0.0
    for ctx in rows + cols:
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = pauli(ctx[i]), pauli(ctx[j])
                worst = max(worst, float(np.max(np.abs(a @ b - b @ a))))
    row_products = tuple(_sign_of_identity(_product(r)) for r in rows)
    col_products = tuple(_sign_of_identity(_product(c)) for c in cols)

    # column 1 is the alpha setting, column 2 the beta setting, row 3 the joint one
    subset = (tuple(cols[0]), tuple(cols[1]), tuple(rows[2]))
    a = STANDARD

    def same(label, op):
        return bool(np.allclose(pauli(label), op))

    matches = (
        {cols[0][0], cols[0][1]} == {a.alpha1, a.alpha2}
        and {cols[1][0], cols[1][1]} == {a.beta1, a.beta2}
        and same(cols[0][2], a.operator("A"))
        and same(cols[1][2], a.operator("B"))
        and same(rows[2][2], a.operator("A") @ a.operator("B"))
    )
    return MerminPeresReport(
        row_products=row_products,
        column_products=col_products,
        max_commutator=worst,
        contexts_commute=worst <= 1e-12,
        bicontextual_subset=subset,
        subset_matches_assignment=bool(matches),
        ms_label_discrepancies=tuple(label_discrepancies(ms_basis())),
    )
