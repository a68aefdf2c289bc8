import numpy as np
import pytest

from secantdyn.cycles import (
    DIAGONAL_PATTERNS,
    GOLDEN_NEGATIVE,
    GOLDEN_POSITIVE,
    CycleType,
    _label,
    classify,
    closure_residual,
    construct_polynomial,
    cross_ratio,
    cycle_p_values,
    diagonal_pattern,
    find_four_cycles,
    find_periodic_orbits,
    golden_defect,
    make_four_cycle,
    ordering,
    shooting_jacobian,
    shooting_residual,
    stability,
)
from secantdyn.errors import (
    DegenerateQuadruple,
    Incompatible,
    InputError,
    OrderingViolation,
    SignPatternMismatch,
)
from secantdyn.polynomial import named_polynomial
from secantdyn.secant_map import SecantSystem

RECT = (0.5, 3.5, 0.5, 3.5)
CUBIC_I_CYCLE = (1.0, 2.0, 3.0, (4.0 - GOLDEN_POSITIVE) / (2.0 - GOLDEN_POSITIVE))


@pytest.fixture(scope="module")
def cubic_i():
    return SecantSystem.from_polynomial(named_polynomial("cubic-i"))


def test_golden_values_satisfy_the_quadratic():
    assert golden_defect(GOLDEN_POSITIVE) < 1e-14
    assert golden_defect(GOLDEN_NEGATIVE) < 1e-14
    assert golden_defect(0.5) > 0.1
    assert golden_defect(1.0) == float("inf")


def test_cross_ratio_of_known_cycle():
    assert cross_ratio(*CUBIC_I_CYCLE) == pytest.approx(GOLDEN_POSITIVE, abs=1e-9)
    with pytest.raises(DegenerateQuadruple):
        cross_ratio(1.0, 2.0, 2.0, 3.0)


@pytest.mark.parametrize(
    "xs, expected",
    [
        ((1.0, 2.0, 4.0, 3.0), CycleType.I),
        ((1.0, 4.0, 2.0, 3.0), CycleType.II),
        ((1.0, 3.0, 4.0, 2.0), CycleType.III),
        ((1.0, 3.0, 2.0, 4.0), CycleType.IV),
    ],
)
def test_classify_admissible_orderings(xs, expected):
    assert classify(*xs) is expected
    # any rotation of the cycle is the same cycle
    assert classify(*(xs[2:] + xs[:2])) is expected


@pytest.mark.parametrize("xs", [(1.0, 2.0, 3.0, 4.0), (1.0, 4.0, 3.0, 2.0)])
def test_classify_forbidden_orderings(xs):
    with pytest.raises(Incompatible):
        classify(*xs)


def test_classify_checks_signs():
    values = (2.236, 1.118, -1.382, -1.0)
    assert classify(*CUBIC_I_CYCLE, p_values=values) is CycleType.I
    assert classify(*CUBIC_I_CYCLE, p_values=[-v for v in values]) is CycleType.I
    with pytest.raises(SignPatternMismatch):
        classify(*CUBIC_I_CYCLE, p_values=(1.0, 1.0, 1.0, 1.0))


def test_ordering_rejects_repeats():
    assert ordering(1.0, 2.0, 4.0, 3.0) == "abdc"
    with pytest.raises(DegenerateQuadruple):
        ordering(1.0, 1.0, 2.0, 3.0)


def test_stability_labels():
    assert _label((0.5, 3.0)) == "saddle"
    assert _label((0.5, -0.2)) == "attractor"
    assert _label((complex(1.5, 1.0), complex(1.5, -1.0))) == "repeller"
    assert _label((1.0, 0.3)) == "non-hyperbolic"


def test_shooting_jacobian_against_finite_differences(cubic_i):
    p = cubic_i.p
    X = np.array([[0.9, 2.2, 2.7, 2.1], [1.3, 1.1, 3.0, 2.5]])
    J = shooting_jacobian(p, X)
    h = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fd = (shooting_residual(p, X + e) - shooting_residual(p, X - e)) / (2 * h)
        assert np.allclose(J[:, :, k], fd, atol=1e-6)


def test_known_cycle_closes(cubic_i):
    assert closure_residual(cubic_i, CUBIC_I_CYCLE) < 1e-4
    assert np.max(np.abs(shooting_residual(cubic_i.p, np.array([CUBIC_I_CYCLE])))) < 1e-6


def test_stability_of_known_cycle(cubic_i):
    st = stability(cubic_i, CUBIC_I_CYCLE)
    big, small = st.eigenvalues
    assert big == pytest.approx(483.55, rel=1e-3)
    assert abs(small - 0.05) <= 0.005
    assert st.label == "saddle"
    assert st.trace == pytest.approx(big + small)
    assert st.determinant == pytest.approx(big * small)
    v_big, v_small = st.eigenvectors
    assert abs(abs(np.dot(v_big, (-0.65, -0.76))) - 1) < 0.01
    assert abs(abs(np.dot(v_small, (-0.75, 0.66))) - 1) < 0.01


def test_find_known_four_cycle(cubic_i):
    cycles = find_four_cycles(cubic_i, RECT)
    assert cycles
    for cyc in cycles:
        assert golden_defect(cyc.lam) <= 1e-8
        assert cyc.residual <= 1e-9
    best = min(cycles, key=lambda c: max(abs(u - v) for u, v in zip(c.xs, CUBIC_I_CYCLE)))
    assert max(abs(u - v) for u, v in zip(best.xs, CUBIC_I_CYCLE)) < 1e-5
    assert best.cycle_type is CycleType.I
    assert best.lam == pytest.approx(GOLDEN_POSITIVE, abs=1e-8)
    assert best.sign_pattern == "++--"
    assert best.diagonal_pattern == "++--"


def test_no_two_or_three_cycles(cubic_i):
    assert find_periodic_orbits(cubic_i, RECT, 2, density=24) == []
    assert find_periodic_orbits(cubic_i, RECT, 3, density=24) == []


def test_periodic_search_rejects_bad_arguments(cubic_i):
    with pytest.raises(InputError):
        find_periodic_orbits(cubic_i, RECT, 1)
    with pytest.raises(InputError):
        find_periodic_orbits(cubic_i, (1.0, 1.0, 0.0, 2.0), 4)


@pytest.mark.parametrize(
    "cycle_type, unknown",
    [
        (CycleType.I, 2.447213595),
        (CycleType.II, 2.236067977),
        (CycleType.III, 1.552786405),
        (CycleType.IV, 2.236067977),
    ],
)
def test_construct_each_type(cycle_type, unknown):
    built = construct_polynomial(cycle_type)
    cyc = built.cycle
    assert cyc.cycle_type is cycle_type
    assert built.polynomial.degree() == 3
    assert any(abs(v - unknown) < 1e-8 for v in cyc.xs)
    assert golden_defect(cyc.lam) < 1e-10
    if cycle_type in (CycleType.I, CycleType.II):
        assert cyc.lam == pytest.approx(GOLDEN_POSITIVE)
    else:
        assert cyc.lam == pytest.approx(GOLDEN_NEGATIVE)
    assert cyc.diagonal_pattern == DIAGONAL_PATTERNS[cycle_type]
    assert cyc.residual <= 1e-9
    assert cyc.p_values[3] == pytest.approx(-1.0, abs=1e-9)


def test_construct_matches_named_cubic():
    built = construct_polynomial(CycleType.I)
    assert np.allclose(built.interpolant.coefficients, (2.23606798, -1.11803390, -0.6909830, 3.27254249), atol=1e-6)
    assert built.interpolant.nodes == pytest.approx((1.0, 2.0, 3.0, 2.447213595))


def test_constructed_cycle_is_found_again():
    built = construct_polynomial(CycleType.III)
    found = find_four_cycles(built.system, RECT)
    target = built.cycle.xs
    assert any(max(abs(u - v) for u, v in zip(c.xs, target)) < 1e-8 for c in found)


def test_construct_rejects_bad_base():
    with pytest.raises(OrderingViolation):
        construct_polynomial(CycleType.I, base=(1.0, 3.0, 2.0))
    with pytest.raises(OrderingViolation):
        construct_polynomial(CycleType.II, base=(1.0, 2.0))
    with pytest.raises(InputError):
        construct_polynomial(CycleType.I, free_value=0.0)


def test_cycle_p_values_follow_the_secant_relations():
    xs = CUBIC_I_CYCLE
    v = cycle_p_values(xs, -1.0)
    assert v[3] == pytest.approx(-1.0)
    assert np.allclose(v, (2.23606798, 1.118033989, -1.381966011, -1.0), atol=1e-7)


def test_make_four_cycle_dict(cubic_i):
    cyc = make_four_cycle(cubic_i, CUBIC_I_CYCLE[1:] + CUBIC_I_CYCLE[:1])
    assert cyc.xs[0] == 1.0
    d = cyc.as_dict()
    assert d["type"] == "I"
    assert len(d["points"]) == 4
    assert d["points"][0] == [1.0, 2.0]
    assert d["stability"] == "saddle"
    assert diagonal_pattern(cyc.xs) == d["diagonal_pattern"]
