import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bictx.behavior import (
    Behavior,
    NegativityCertificate,
    PairDistribution,
    SettingTables,
    behavior_from_tables,
    check_no_disturbance,
    moments_feasible,
    moments_from_pair_distribution,
    pair_distribution_from_moments,
)
from bictx.errors import DomainError, NoDisturbanceError, SourceDependenceError

from conftest import SQ, unit


def test_negative_cell_for_optimal_moments():
    cert = pair_distribution_from_moments(SQ, SQ, 0.0)
    assert isinstance(cert, NegativityCertificate)
    assert cert.cell == (-1, -1)
    assert abs(cert.value - (1 - math.sqrt(2)) / 4) <= 1e-15
    assert cert.to_dict()["cell"] == "--"


def test_uniform_and_deterministic_tables():
    assert pair_distribution_from_moments(0, 0, 0) == PairDistribution.uniform()
    assert pair_distribution_from_moments(1, 1, 1).cells() == (1.0, 0.0, 0.0, 0.0)
    assert pair_distribution_from_moments(-1, 1, -1).cells() == (0.0, 0.0, 1.0, 0.0)


@given(unit, unit, unit)
def test_certificate_iff_moment_condition_fails(q, r, c):
    out = pair_distribution_from_moments(q, r, c)
    lo, hi = abs(q + r) - 1, 1 - abs(q - r)
    # only the rounding band around the boundary may go either way
    if c < lo - 1e-11 or c > hi + 1e-11:
        assert isinstance(out, NegativityCertificate)
    elif lo + 1e-11 <= c <= hi - 1e-11:
        assert isinstance(out, PairDistribution)
        assert moments_feasible(q, r, c)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 0.1))
def test_moment_round_trip(weights):
    p = np.array(weights) / sum(weights)
    d = PairDistribution.from_array(p)
    back = pair_distribution_from_moments(*moments_from_pair_distribution(d))
    assert np.allclose(back.as_array(), d.as_array(), atol=1e-12)


def test_pair_distribution_validation():
    with pytest.raises(DomainError):
        PairDistribution(0.5, 0.5, 0.1, -0.1)
    with pytest.raises(DomainError):
        PairDistribution(0.5, 0.5, 0.5, 0.0)
    d = PairDistribution(np.float64(0.25), 0.25, 0.25, 0.25)
    assert type(d.p_pp) is float
    assert PairDistribution.from_dict(d.to_dict()) == d


@pytest.mark.parametrize("field", range(5))
@pytest.mark.parametrize("value", [1.5, -1.01, float("nan"), float("inf")])
def test_behavior_rejects_out_of_range(field, value):
    args = [0.0] * 5
    args[field] = value
    with pytest.raises(DomainError):
        Behavior(*args)


def test_behavior_source_dependence_rejected():
    with pytest.raises(SourceDependenceError):
        Behavior(0.5, 0.5, 0, 0, 0, mean_a=0.0)
    Behavior(0.5, 0.5, 0, 0, 0, mean_a=0.25, mean_b=0.0)


def test_behavior_json_round_trip():
    b = Behavior(0.1, -0.2, 0.3, -0.4, 0.5, mean_a=-0.02, mean_b=-0.12)
    assert Behavior.from_dict(b.to_dict()) == b
    with pytest.raises(DomainError):
        Behavior.from_dict({"alpha1": 0})
    with pytest.raises(DomainError):
        Behavior.from_dict({"alpha1": "x", "alpha2": 0, "beta1": 0, "beta2": 0, "corrAB": 0})
    with pytest.raises(DomainError):
        Behavior.from_dict([1, 2])


def _product_tables(a1, a2, b1, b2, joint):
    def prod(x, y):
        return PairDistribution(*((1 + s * x) * (1 + t * y) / 4 for s, t in ((1, 1), (1, -1), (-1, 1), (-1, -1))))

    return SettingTables(prod(a1, a2), prod(b1, b2), joint)


def test_behavior_from_consistent_tables():
    joint = pair_distribution_from_moments(0.5 * 0.2, 0.0, 0.3)
    t = _product_tables(0.5, 0.2, 0.0, 0.6, joint)
    b = behavior_from_tables(t)
    assert b.moments() == pytest.approx((0.5, 0.2, 0.0, 0.6, 0.3), abs=1e-15)
    assert b.mean_a == pytest.approx(0.1)
    assert SettingTables.from_dict(t.to_dict()) == t


def test_disturbing_tables_rejected():
    joint = pair_distribution_from_moments(0.5, 0.0, 0.3)  # <A> should be 0.1
    t = _product_tables(0.5, 0.2, 0.0, 0.6, joint)
    report = check_no_disturbance(t)
    assert not report.ok and report.violations
    with pytest.raises(NoDisturbanceError) as exc:
        behavior_from_tables(t)
    assert exc.value.report is not None
    assert "A" in str(exc.value) or "alpha" in str(exc.value)


def test_means_are_exact_cell_sums():
    p = [Fraction(1, 8), Fraction(3, 8), Fraction(1, 4), Fraction(1, 4)]
    d = PairDistribution(*(float(x) for x in p))
    q, r, c = moments_from_pair_distribution(d)
    assert q == float(p[0] + p[1] - p[2] - p[3])
    assert r == float(p[0] - p[1] + p[2] - p[3])
    assert c == float(p[0] - p[1] - p[2] + p[3])
