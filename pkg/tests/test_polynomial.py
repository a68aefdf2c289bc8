import math

import numpy as np
import pytest

from secantdyn.errors import (
    DegreeTooHigh,
    DegreeZero,
    DuplicateNodes,
    InputError,
    MultipleRootDetected,
    PolynomialSyntaxError,
)
from secantdyn.polynomial import (
    Polynomial,
    chebyshev,
    critical_and_inflection_points,
    from_newton_form,
    named_polynomial,
    newton_interpolate,
    one_inflection,
    parse_polynomial,
    q_coefficients,
    q_eval,
    q_in_x,
    q_x_eval,
    q_y_eval,
    real_roots,
)


def test_trailing_zeros_trimmed():
    p = Polynomial((1.0, 2.0, 0.0, 0.0))
    assert p.coeffs == (1.0, 2.0)
    assert p.degree() == 1
    assert Polynomial((0.0, 0.0)).is_zero()


def test_degree_cap_and_non_finite():
    with pytest.raises(DegreeTooHigh):
        Polynomial(tuple([0.0] * 65 + [1.0]))
    with pytest.raises(InputError):
        Polynomial((1.0, float("nan")))


def test_eval_with_derivative_matches_derivative():
    p = chebyshev(5)
    x = np.linspace(-1, 1, 11)
    value, slope = p.eval_with_derivative(x)
    assert np.allclose(value, p.eval(x))
    assert np.allclose(slope, p.derivative().eval(x))
    v, s = p.eval_with_derivative(0.3)
    assert isinstance(v, float) and isinstance(s, float)


def test_chebyshev_three():
    assert chebyshev(3).coeffs == (0.0, -3.0, 0.0, 4.0)


def test_roots_of_chebyshev_three():
    roots = real_roots(chebyshev(3))
    assert len(roots) == 3
    expected = (-math.sqrt(3) / 2, 0.0, math.sqrt(3) / 2)
    assert all(abs(r - e) <= 1e-12 for r, e in zip(roots, expected))
    assert roots.simple


def test_roots_of_chebyshev_eleven_are_cosines():
    roots = real_roots(chebyshev(11))
    expected = sorted(math.cos(math.pi * (j + 0.5) / 11) for j in range(11))
    assert len(roots) == 11
    assert max(abs(r - e) for r, e in zip(roots, expected)) <= 1e-10


def test_roots_of_quintic_with_three_real_roots():
    roots = real_roots(named_polynomial("quintic-b"))
    assert len(roots) == 3
    for r, e in zip(roots, (-1.43014, 0.817633, 1.17823)):
        assert abs(r - e) <= 1e-5


def test_double_root_rejected():
    # (x - 1)^2 (x + 2)
    with pytest.raises(MultipleRootDetected):
        real_roots(Polynomial((2.0, -3.0, 0.0, 1.0)))
    loose = real_roots(Polynomial((2.0, -3.0, 0.0, 1.0)), require_simple=False)
    assert not loose.simple


def test_constant_has_no_roots():
    with pytest.raises(DegreeZero):
        real_roots(Polynomial((3.0,)))


def test_roots_restricted_to_interval():
    roots = real_roots(chebyshev(3), (-0.5, 1.0))
    assert len(roots) == 2


def test_critical_and_inflection_points():
    crit, infl = critical_and_inflection_points(chebyshev(3), (-1.0, 1.0))
    assert np.allclose(crit.as_list(), [-0.5, 0.5])
    assert np.allclose(infl.as_list(), [0.0])
    assert one_inflection(chebyshev(3), (-1.0, 1.0))
    assert not one_inflection(chebyshev(5), (-1.0, 1.0))


def test_newton_interpolation_through_cycle_points():
    nodes = (1.0, 2.0, 3.0, 2.447213595)
    values = (2.23606798, 1.118033989, -1.381966011, -1.0)
    interp = newton_interpolate(nodes, values)
    for got, want in zip(interp.coefficients, (2.23606798, -1.11803390, -0.6909830, 3.27254249)):
        assert abs(got - want) <= 1e-6
    assert np.allclose(interp.polynomial.eval(np.array(nodes)), values, atol=1e-12)


def test_newton_form_expansion():
    # 1 + 2(x-1) + 3(x-1)(x-2) = 3x^2 - 7x + 5
    p = from_newton_form((1.0, 2.0), (1.0, 2.0, 3.0))
    assert np.allclose(p.coeffs, (5.0, -7.0, 3.0))


def test_duplicate_nodes():
    with pytest.raises(DuplicateNodes):
        newton_interpolate((1.0, 2.0, 1.0), (0.0, 1.0, 2.0))


def test_q_telescoping_symmetry_and_diagonal():
    rng = np.random.default_rng(1)
    p = named_polynomial("quintic-b")
    x, y = rng.uniform(-2, 2, size=(2, 500))
    q = q_eval(p, x, y)
    assert np.allclose(q * (x - y), p.eval(x) - p.eval(y), atol=1e-10)
    assert np.array_equal(q, q_eval(p, y, x))
    assert np.allclose(q_eval(p, x, x), p.derivative().eval(x), atol=1e-12)


def test_q_x_against_finite_differences():
    p = chebyshev(5)
    h = 1e-6
    for x, y in [(0.3, -0.2), (0.9, 0.1), (-0.7, 0.5)]:
        fd = (q_eval(p, x + h, y) - q_eval(p, x - h, y)) / (2 * h)
        assert abs(q_x_eval(p, x, y) - fd) <= 1e-6
        assert q_y_eval(p, x, y) == pytest.approx(q_x_eval(p, y, x))
    for y in (-0.4, 0.2, 0.8):
        assert q_x_eval(p, y, y) == pytest.approx(p.derivative(2).eval(y) / 2)


def test_q_coefficients_of_chebyshev_three():
    # q(x, y) = 4x^2 + 4xy + 4y^2 - 3
    c = q_coefficients(chebyshev(3))
    assert np.array_equal(c, np.array([[-3.0, 0.0, 4.0], [0.0, 4.0, 0.0], [4.0, 0.0, 0.0]]))
    assert np.allclose(q_in_x(chebyshev(3), 0.5).coeffs, (4 * 0.25 - 3, 2.0, 4.0))


def test_parse_polynomial_forms():
    assert parse_polynomial("cheb:3") == chebyshev(3)
    assert parse_polynomial(" 1, 2, 3 ").coeffs == (1.0, 2.0, 3.0)
    newton = parse_polynomial("newton:1,2:1,2,3")
    assert np.allclose(newton.coeffs, (5.0, -7.0, 3.0))
    assert parse_polynomial("cubic-i").degree() == 3


@pytest.mark.parametrize("text", ["", "a,b", "cheb:x", "newton:1,2", "bogus-name"])
def test_parse_polynomial_errors(text):
    with pytest.raises(PolynomialSyntaxError):
        parse_polynomial(text)
