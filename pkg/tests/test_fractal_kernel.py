import math

import numpy as np
import pytest

from diamond_heat.errors import DomainError, InsufficientDepthError
from diamond_heat.fractal_kernel import (
    heat_kernel_level,
    heat_kernel_level_recursive,
    heat_kernel_limit,
    kernel_matrix,
    kernel_pairs,
    level_correction,
    limit_tail,
    schrodinger_kernel,
    uniform_bound,
)
from diamond_heat.geometry import Address, PointArray, deepest_common_bundle, sample_point
from diamond_heat.kernel1d import circle_kernel
from diamond_heat.params import ParameterSequences
from diamond_heat.semigroup import _lower, sample_pairs

SEQ = ParameterSequences((3, 2, 2, 3), (3, 3, 2, 2))
F1 = ParameterSequences.constant(2, 2, 1)
L1 = math.pi / 2

# Quantum-graph oracle on F_1 (j = n = 2), t = 0.1, Richardson-extrapolated
# from h = L_1/256 and L_1/512.  Source x = (arc 0, strand 1, theta = L_1/4).
F1_ORACLE = [
    (Address.radians(0.25 * L1, (1,)), 1.5932881189936563),
    (Address.radians(0.5 * L1, (1,)), 1.1855409160049255),
    (Address.radians(0.5 * L1, (2,)), 0.027822495457643454),
    (Address.radians(1.25 * L1, (1,)), 0.0018683075468186549),
    (Address.exact(1, 2), 0.02776435222329671),
]


@pytest.mark.parametrize("y,expected", F1_ORACLE)
def test_matches_frozen_graph_oracle(y, expected):
    x = Address.radians(0.25 * L1, (1,))
    assert heat_kernel_level(F1, 1, x, y, 0.1).value == pytest.approx(expected, rel=1e-7)


def test_level_zero_is_circle():
    x, y = Address.radians(0.3), Address.radians(2.0)
    assert heat_kernel_level(SEQ, 0, x, y, 0.7).value == circle_kernel(0.7, 0.3, 2.0)


def test_three_routes_agree():
    rng = np.random.default_rng(11)
    for trial in range(40):
        x = sample_point(SEQ, rng)
        if trial % 2:
            # Share the arc and a random-length label prefix.
            keep = int(rng.integers(0, 5))
            z = sample_point(SEQ, rng)
            y = Address.radians(x.eta + rng.normal(0, 0.02), x.branches[:keep] + z.branches[keep:])
        else:
            y = sample_point(SEQ, rng)
        for i in range(5):
            for t in (0.05, 0.7):
                a = heat_kernel_level(SEQ, i, x, y, t).value
                b = heat_kernel_level_recursive(SEQ, i, x, y, t)
                X, Y = PointArray.from_addresses(SEQ, [x], i), PointArray.from_addresses(SEQ, [y], i)
                c = kernel_pairs(SEQ, i, X, Y, t)[0]
                d = kernel_matrix(SEQ, i, X, Y, t)[0, 0]
                assert abs(a - b) < 1e-11 and abs(a - c) < 1e-11 and abs(a - d) < 1e-11


def test_kernel_matrix_chunks_and_symmetry():
    X, Y = sample_pairs(SEQ, 3, 60, seed=2)
    full = kernel_matrix(SEQ, 3, X, Y, 0.3)
    chunked = kernel_matrix(SEQ, 3, X, Y, 0.3, chunk=7)
    assert np.array_equal(full, chunked)
    assert np.max(np.abs(full - kernel_matrix(SEQ, 3, Y, X, 0.3).T)) < 1e-12


def test_continuity_at_junction():
    # Approaching a level-1 junction along every incident strand gives the junction value.
    seq = ParameterSequences.constant(2, 3, 2)
    x = Address.radians(0.4, (1, 2))
    j = Address.exact(1, 2)
    at = heat_kernel_level(seq, 2, x, j, 0.2).value
    L = seq.L(2)
    for w in [(a, b) for a in (1, 2, 3) for b in (1, 2, 3)]:
        for eta in (math.pi / 2 - 1e-7, math.pi / 2 + 1e-7):
            near = heat_kernel_level(seq, 2, x, Address.radians(eta, w), 0.2).value
            assert near == pytest.approx(at, abs=1e-5)
    assert L > 0


def test_projection_consistency_exact():
    rng = np.random.default_rng(5)
    x = sample_point(SEQ, rng)
    y = Address.radians(x.eta + 0.01, x.branches[:2] + (3 - x.branches[2] if x.branches[2] < 3 else 1,) + x.branches[3:])
    i_star, saturated = deepest_common_bundle(SEQ, x, y)
    assert not saturated
    ref = heat_kernel_level(SEQ, i_star, x, y, 0.4).value
    for i in range(i_star, 5):
        assert heat_kernel_level(SEQ, i, x, y, 0.4).value == ref
    res = heat_kernel_limit(SEQ, x, y, 0.4)
    assert res.value == ref and res.tail_bound == 0.0 and res.i_star == i_star


def test_limit_saturated_pair():
    x = Address.radians(0.3, (1, 2, 1, 3))
    res = heat_kernel_limit(SEQ, x, x, 0.5)
    assert res.saturated and 0 < res.tail_bound <= 1e-12
    exact = heat_kernel_level(SEQ, 4, x, x, 0.5).value
    assert abs(res.value - exact) <= 2e-12


def test_limit_junction_pair_is_exact():
    x = Address.exact(1, 3)
    res = heat_kernel_limit(SEQ, x, x, 0.05)
    assert res.tail_bound == 0.0
    assert res.value == heat_kernel_level(SEQ, 4, x, x, 0.05).value


def test_insufficient_depth():
    shallow = ParameterSequences.constant(2, 2, 1)
    x = Address.radians(0.3, (1,))
    with pytest.raises(InsufficientDepthError) as err:
        heat_kernel_limit(shallow, x, x, 0.01)
    assert err.value.bound > 1e-12


def test_bound_and_tail():
    t = 0.5
    for i in range(1, 5):
        J, N = SEQ.J(i), SEQ.N(i)
        expected = N * J * (1 + 1 / (J * J * t)) * math.exp(-J * J * t)
        assert uniform_bound(SEQ, i, t) == pytest.approx(expected, rel=1e-12)
    assert limit_tail(SEQ, 4, t) < uniform_bound(SEQ, 4, t) * 1.01
    assert limit_tail(SEQ, 1, t) >= uniform_bound(SEQ, 2, t)
    with pytest.raises(DomainError):
        uniform_bound(SEQ, 0, t)


def test_level_correction_is_difference():
    X, Y = sample_pairs(SEQ, 3, 200, seed=9)
    for t in (0.05, 0.5):
        corr = level_correction(SEQ, 3, X, Y, t)
        diff = kernel_pairs(SEQ, 3, X, Y, t) - kernel_pairs(SEQ, 2, _lower(X, 2), _lower(Y, 2), t)
        assert np.max(np.abs(corr - diff)) < 1e-11


def test_schrodinger_conjugate_and_eps():
    x = Address.radians(0.3, (1, 2, 1, 1))
    y = Address.radians(0.35, (1, 2, 2, 1))
    a = schrodinger_kernel(SEQ, x, y, 0.3, eps=1e-2)
    b = schrodinger_kernel(SEQ, x, y, -0.3, eps=1e-2)
    assert abs(a.value - b.value.conjugate()) <= 1e-12
    c = schrodinger_kernel(SEQ, y, x, 0.3, eps=1e-2)
    assert abs(a.value - c.value) <= 1e-12
    d = schrodinger_kernel(SEQ, x, y, 0.3)
    assert d.eps == pytest.approx(3e-4)
    out = a.to_json()
    assert set(out) >= {"re", "im", "abs2", "eps", "tail_bound"}


def test_errors():
    x = Address.radians(0.3, (1,))
    with pytest.raises(DomainError):
        heat_kernel_level(SEQ, 1, x, x, 0.0)
    with pytest.raises(DomainError):
        heat_kernel_level(SEQ, 2, x, x, 1.0)
    with pytest.raises(DomainError):
        schrodinger_kernel(SEQ, x, x, 1.0, eps=-1)


def test_diagonal_tail_collapses():
    seq = ParameterSequences.constant(2, 2, 4)
    x = Address.radians(0.7, (1, 2, 2, 1))
    res = heat_kernel_limit(seq, x, x, 1.0)
    assert res.saturated and res.tail_bound < 1e-10
    # 2^i * 2^i * (1 + 4^-i) * exp(-4^i) summed past the stopping level.
    expected = sum(4.0**k * (1 + 4.0**-k) * math.exp(-(4.0**k)) for k in range(res.levels_used + 1, 40))
    assert res.tail_bound == pytest.approx(expected, rel=1e-9)
