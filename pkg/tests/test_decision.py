import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bictx.behavior import Behavior, PairDistribution, SettingTables
from bictx.decision import (
    CorrelationBounds,
    Verdict,
    build_witness,
    compute_bounds,
    construct_jpd,
    decide_four_sides,
    decide_single,
    jpd_marginals,
    mix_behaviors,
    necessary_bound_check,
    side_ratios,
)
from bictx.errors import ConstructionError, ContractError, DomainError
from bictx.quantum import QubitState, behavior_for_states, ideal_behavior

from conftest import SQ, angles_phi, angles_theta, behaviors

D1 = Behavior(1, 1, 1, 1, 1, mean_a=1, mean_b=1)
D2 = Behavior(1, -1, -1, 1, 1, mean_a=-1, mean_b=-1)
SUPER = Behavior(1, 0, 0, 1, 1)
ZERO = Behavior(0, 0, 0, 0, 0)


# ---------------------------------------------------------------- bounds


def test_bounds_examples(optimal):
    assert compute_bounds(ZERO) == CorrelationBounds(-1, 1, -1, 1)
    b = compute_bounds(Behavior(1, 1, 0, 0, 0))
    assert (b.L1, b.R1) == (0.0, 0.0)
    b = compute_bounds(optimal)
    assert b.L1 == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert b.R1 == pytest.approx(1.0, abs=1e-15)


# ---------------------------------------------------------------- single criterion


def test_optimal_state_is_bicontextual(optimal):
    r = decide_single(optimal)
    assert r.verdict is Verdict.BICONTEXTUAL
    assert r.product_min == pytest.approx((math.sqrt(2) - 1) ** 2, abs=1e-15)
    assert r.product_max == pytest.approx(1.0, abs=1e-15)
    assert r.single_lhs == pytest.approx(3 - 2 * math.sqrt(2), abs=1e-12)
    assert r.witness is None
    assert r.sides.all_violated


def test_deterministic_behavior_is_classical():
    r = decide_single(D1)
    assert r.verdict is Verdict.NON_BICONTEXTUAL
    assert r.product_min == r.product_max == 1.0
    assert r.single_lhs == 0.0
    assert (r.witness.c1, r.witness.c2) == (1.0, 1.0)


def test_super_quantum_behavior():
    r = decide_single(SUPER)
    assert r.verdict is Verdict.BICONTEXTUAL
    assert (r.bounds.L1, r.bounds.R1, r.bounds.L2, r.bounds.R2) == (0, 0, 0, 0)
    assert r.single_lhs == 1.0


def test_boundary_is_classical():
    # hyperbola touches the corner R1*R2 = 1 exactly
    assert decide_single(Behavior(0, 0, 0, 0, 1)).verdict is Verdict.NON_BICONTEXTUAL
    assert decide_single(Behavior(0, 0, 0, 0, -1)).verdict is Verdict.NON_BICONTEXTUAL


def test_report_json_fields(optimal):
    d = decide_single(optimal).to_dict()
    assert list(d) == [
        "verdict", "L1", "R1", "L2", "R2", "min", "max", "singleLHS",
        "sides", "necessaryBound", "necessaryViolated",
    ]
    assert d["verdict"] == "BiContextual"
    assert "witness" in decide_single(ZERO).to_dict()


# ---------------------------------------------------------------- four sides


def test_four_sides_examples(optimal):
    assert decide_four_sides(optimal).all_violated
    assert decide_four_sides(ZERO).left
    experimental = Behavior(-SQ, SQ, SQ, -SQ, 0.0)
    b = compute_bounds(experimental)
    assert b.L1 == pytest.approx(-1) and b.R1 == pytest.approx(1 - math.sqrt(2))
    assert decide_four_sides(experimental).all_violated


@given(behaviors())
def test_sides_match_single_criterion(b):
    r = decide_single(b, witness=False)
    assert decide_four_sides(b).all_violated == (r.verdict is Verdict.BICONTEXTUAL)


def test_zero_denominators_are_total():
    # L_i = R_i = 0 and <AB> = 0: the quotient form is 0/0, the product form is fine
    b = Behavior(1, 1, 0, 0, 0)
    assert decide_four_sides(b) == (True, True, True, True)
    r = decide_single(b)
    ratios = side_ratios(b.corr_ab, *(getattr(r.bounds, k) for k in ("L1", "R1", "L2", "R2")))
    assert np.isnan(ratios).all()


# ---------------------------------------------------------------- necessary bound


def test_necessary_bound_examples(optimal):
    assert necessary_bound_check(SUPER) == (0.0, True)
    bound, violated = necessary_bound_check(optimal)
    assert bound == pytest.approx(1.0) and not violated
    assert necessary_bound_check(ZERO) == (1.0, False)
    # strictly weaker: the optimal state violates the single criterion anyway
    assert decide_single(optimal).bicontextual


@given(behaviors())
def test_necessary_violation_implies_bicontextual(b):
    _, violated = necessary_bound_check(b)
    if violated:
        assert decide_single(b, witness=False).bicontextual


# ---------------------------------------------------------------- witness


def test_witness_examples():
    w = build_witness(D1)
    assert (w.c1, w.c2) == (1.0, 1.0)
    assert w.mu1.cells() == (1.0, 0.0, 0.0, 0.0)
    w = build_witness(ZERO)
    assert (w.c1, w.c2) == (0.0, 0.0)
    assert w.mu1 == PairDistribution.uniform() == w.mu2


def test_witness_half_half_example():
    b = Behavior(0.5, 0, 0, 0.5, 0.2)
    bounds = compute_bounds(b)
    assert (bounds.L1, bounds.R1, bounds.L2, bounds.R2) == (-0.5, 0.5, -0.5, 0.5)
    # the hand-picked point is admissible ...
    assert bounds.contains(0.5, 0.4) and 0.5 * 0.4 == pytest.approx(0.2)
    # ... but the minimum of |c1|+|c2| is the symmetric point, lower-left branch first
    w = build_witness(b)
    assert w.c1 == pytest.approx(-math.sqrt(0.2)) and w.c2 == pytest.approx(-math.sqrt(0.2))
    assert w.c1 * w.c2 == pytest.approx(0.2, abs=1e-15)


def test_witness_refused_for_bicontextual(optimal):
    with pytest.raises(ContractError):
        build_witness(optimal)


@given(behaviors())
def test_witness_sound(b):
    r = decide_single(b)
    if r.verdict is Verdict.BICONTEXTUAL:
        return
    w = r.witness
    # degenerate intervals can come out with L > R by an ulp
    assert r.bounds.contains(w.c1, w.c2, tol=1e-12)
    for mu in (w.mu1, w.mu2):
        assert min(mu.cells()) >= 0 and sum(mu.cells()) == pytest.approx(1, abs=1e-12)
    induced = w.induced_behavior()
    assert np.allclose(induced.moments(), b.moments(), atol=1e-9)


@given(st.tuples(*[st.floats(-1, 1)] * 4))
def test_corner_extremality(box):
    L1, R1 = sorted(box[:2])
    L2, R2 = sorted(box[2:])
    bounds = CorrelationBounds(L1, R1, L2, R2)
    g1, g2 = np.meshgrid(np.linspace(L1, R1, 41), np.linspace(L2, R2, 41))
    prod = g1 * g2
    corners = bounds.corners()
    assert prod.min() >= min(corners) - 1e-15
    assert prod.max() <= max(corners) + 1e-15
    assert prod.min() == pytest.approx(min(corners), abs=1e-15)
    assert prod.max() == pytest.approx(max(corners), abs=1e-15)


# ---------------------------------------------------------------- joint distribution


def _check_marginals(t: SettingTables, tol=1e-12):
    p = construct_jpd(t)
    assert p.shape == (2,) * 6
    assert p.min() >= 0 and abs(p.sum() - 1) <= tol
    m = jpd_marginals(p)
    assert np.max(np.abs(m["alpha"] - t.p_alpha.as_array())) <= tol
    assert np.max(np.abs(m["beta"] - t.p_beta.as_array())) <= tol
    assert np.max(np.abs(m["joint"] - t.p_joint.as_array())) <= tol
    return p


def test_jpd_optimal_state():
    _check_marginals(ideal_behavior(math.pi / 4, math.pi / 4).tables)


def test_jpd_uniform_tables_is_uniform():
    p = _check_marginals(SettingTables.uniform())
    # A and B are fixed by the alphas and betas, so 16 cells carry 1/16 each
    assert np.count_nonzero(p) == 16
    assert np.allclose(p[p > 0], 1 / 16)


def test_jpd_zero_marginal_rule():
    # <A> = 1 means p(A=-1) = 0; the quotient there is defined as 0
    _check_marginals(D1_tables())


def D1_tables():
    delta = PairDistribution(1, 0, 0, 0)
    return SettingTables(delta, delta, delta)


def test_jpd_rejects_mass_on_vanishing_marginal():
    delta = PairDistribution(1, 0, 0, 0)
    with pytest.raises(Exception):
        construct_jpd(SettingTables(delta, delta, PairDistribution(0, 1, 0, 0)))


@given(angles_theta, angles_phi, angles_theta, angles_phi)
def test_jpd_recovers_quantum_tables(t1, p1, t2, p2):
    b = behavior_for_states(QubitState(t1, p1), QubitState(t2, p2))
    _check_marginals(b.tables)


# ---------------------------------------------------------------- mixtures


def test_mixture_of_deterministic_behaviors():
    assert not decide_single(D1).bicontextual
    assert not decide_single(D2).bicontextual
    mixed = mix_behaviors(D1, 0.5, D2)
    assert mixed.moments() == (1.0, 0.0, 0.0, 1.0, 1.0)
    r = decide_single(mixed)
    assert r.bicontextual and r.single_lhs == 1.0


def test_mixture_identities(optimal):
    assert mix_behaviors(optimal, 1.0, D1) == optimal
    assert mix_behaviors(ZERO, 0.5, ZERO) == ZERO
    with pytest.raises(DomainError):
        mix_behaviors(ZERO, 1.5, ZERO)
