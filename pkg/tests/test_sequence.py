import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nudd.algebra import GeneratorLabel, all_labels, pauli_of, xor_add
from nudd.sequence import (IntervalGrid, ModulationFunction, build_schedule, evaluate_F,
                           from_linear, modulation_sign, nudd_fraction, successor, to_linear,
                           udd_fraction)

L = GeneratorLabel.from_string


def test_udd_examples():
    assert udd_fraction(1, 1) == pytest.approx(0.5, abs=1e-15)
    assert udd_fraction(1, 2) == pytest.approx(0.25, abs=1e-15)
    assert udd_fraction(2, 2) == pytest.approx(0.75, abs=1e-15)
    for n in range(1, 7):
        assert udd_fraction(0, n) == 0
        assert udd_fraction(n + 1, n) == 1


@pytest.mark.parametrize('args', [(-1, 2), (4, 2), (0, -1)])
def test_udd_out_of_range(args):
    with pytest.raises(ValueError):
        udd_fraction(*args)


def test_nudd_examples():
    assert nudd_fraction((0, 1), (2, 2)) == pytest.approx(0.0625, abs=1e-16)
    assert nudd_fraction((2, 3), (2, 2)) == 1
    assert nudd_fraction((1, 1, 1, 2), (1, 1, 1, 1)) == 1
    with pytest.raises(ValueError):
        nudd_fraction((3, 1), (2, 2))
    with pytest.raises(ValueError):
        nudd_fraction((0, 4), (2, 2))


@pytest.mark.parametrize('orders', [(1,), (4,), (2, 2), (3, 3), (1, 2), (2, 1, 3), (2,)*4])
def test_grid_sorted_and_counted(orders):
    g = IntervalGrid.from_orders(orders)
    assert g.Q == math.prod(n + 1 for n in orders)
    assert g.breakpoints[0] == 0 and g.breakpoints[-1] == 1
    assert np.all(np.diff(g.breakpoints) > 0)
    # interval starts equal nudd_fraction of the interval label
    for k in range(g.Q):
        comps = tuple(g.components[k])
        assert g.breakpoints[k] == pytest.approx(
            0.0 if not any(comps) else nudd_fraction(comps, orders), abs=1e-15)


def test_grid_rejects_bad_breakpoints():
    g = IntervalGrid.from_orders((2,))
    with pytest.raises(ValueError):
        IntervalGrid(g.orders, g.breakpoints[::-1], g.components)


def test_linear_bijection_and_carry():
    orders = (2, 3, 1)  # N_1=2, N_2=3, N_3=1
    Q = 3*4*2
    seen = set()
    for k in range(Q):
        comps = from_linear(k, orders)
        assert to_linear(comps, orders) == k
        seen.add(comps)
        if k + 1 < Q:
            assert to_linear(successor(comps, orders), orders) == k + 1
    assert len(seen) == Q
    assert successor((0, 1, 2), orders) == (0, 2, 0)
    assert successor((0, 3, 2), orders) == (1, 0, 0)
    with pytest.raises(ValueError):
        successor((1, 3, 2), orders)


def test_schedule_even_N():
    sched = build_schedule(1, 2)
    assert len(sched) == 9
    assert np.all(np.diff(sched.fractions) > 0)
    assert sched.fractions[-1] == 1 and sched.pulses[-1].is_identity
    merged = build_schedule(1, 2, merged=True)
    assert len(merged) == 8
    assert merged.fractions.max() < 1


@pytest.mark.parametrize('m,N', [(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (2, 2)])
def test_pulse_count(m, N):
    sched = build_schedule(m, N)
    assert len(sched) == (N + 1)**(2*m)
    assert np.all(np.diff(sched.fractions) > 0)
    assert 0 < sched.fractions[0] and sched.fractions[-1] == 1


def test_qdd_N1_terminal_pulse():
    sched = build_schedule(1, 1)
    last = sched.pulses[-1]
    assert last.fraction == 1
    assert last.ops == ('X1', 'Z1')
    Z, X = pauli_of(L('01')).matrix, pauli_of(L('10')).matrix
    assert np.allclose(last.unitary(1), Z @ X)
    merged = build_schedule(1, 1, merged=True)
    assert merged.pulses[-1].fraction == 1
    assert np.allclose(merged.pulses[-1].unitary(1), Z @ X)


def test_m2_schedule():
    sched = build_schedule(2, 2)
    assert len(sched) == 81
    assert np.all(np.diff(sched.fractions) > 0)
    ops = {op for p in sched.pulses for op in p.ops}
    assert ops == {'X1', 'Z1', 'X2', 'Z2'}


def _conjugation_signs(sched, m):
    """Toggling-frame signs from accumulated pulse products, per interval."""
    labels = list(all_labels(2*m))
    mats = [pauli_of(a).matrix for a in labels]
    P = np.eye(2**m, dtype=complex)
    rows = []
    for pulse in sched.pulses:
        rows.append([np.real(np.trace(P.conj().T @ S @ P @ S))/2**m for S in mats])
        P = pulse.unitary(m) @ P
    return labels, np.array(rows), P


@pytest.mark.parametrize('m,orders', [(1, 1), (1, 2), (1, 3), (1, (1, 2)), (1, (3, 2)),
                                      (2, 1), (2, 2)])
def test_modulation_matches_pulse_conjugation(m, orders):
    # independent oracle: conjugating S_alpha through the physical pulses
    sched = build_schedule(m, orders)
    grid = IntervalGrid.from_orders(sched.orders)
    labels, signs, total = _conjugation_signs(sched, m)
    for j, a in enumerate(labels):
        assert np.array_equal(signs[:, j], grid.signs(a))
    # the whole cycle returns to a multiple of the identity
    assert np.allclose(np.abs(np.trace(total))/2**m, 1)


def test_modulation_examples():
    g = IntervalGrid.from_orders((2,))
    assert list(g.signs(L('1'))) == [1, -1, 1]
    assert modulation_sign(L('11'), (1, 1)) == 1
    assert modulation_sign(L('01'), (1, 1)) == -1
    for comps in itertools.product(range(3), repeat=2):
        assert modulation_sign(L('00'), comps) == 1


def test_evaluate_F_examples():
    assert evaluate_F(L('1'), 0.25, (1,)) == 1
    assert evaluate_F(L('1'), 0.75, (1,)) == -1
    half = IntervalGrid.from_orders((1,)).breakpoints[1]
    assert evaluate_F(L('1'), half, (1,)) == 1  # right-closed intervals
    assert evaluate_F(L('1'), np.nextafter(half, 1), (1,)) == -1
    for t in (1e-9, 0.3, 1.0):
        assert evaluate_F(L('0000'), t, (2,)*4) == 1
    for t in (0.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            evaluate_F(L('1'), t, (1,))


@pytest.mark.parametrize('levels,N', [(L_, N) for L_ in (1, 2, 3, 4) for N in (1, 2, 3)])
def test_group_law_exhaustive(levels, N):
    grid = IntervalGrid.from_orders((N,)*levels)
    labels = list(all_labels(levels))
    signs = {a: grid.signs(a) for a in labels}
    for a, b in itertools.product(labels, repeat=2):
        assert np.array_equal(signs[a]*signs[b], signs[xor_add(a, b)])


@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 3),
       st.floats(1e-6, 1.0, exclude_min=False))
def test_group_law_pointwise(N, a, b, t):
    grid = IntervalGrid.from_orders((N, N))
    fa = ModulationFunction(GeneratorLabel.from_int(a, 2), grid)
    fb = ModulationFunction(GeneratorLabel.from_int(b, 2), grid)
    assert fa(t)*fb(t) == (fa*fb)(t)


@pytest.mark.parametrize('orders', [(2, 3), (1, 1, 2), (3, 2, 2)])
def test_self_similarity(orders):
    top = orders[-1]
    full = build_schedule(2, orders, levels=len(orders)) if len(orders) > 2 else \
        build_schedule(1, orders)
    inner = IntervalGrid.from_orders(orders[:-1]).breakpoints
    bounds = [udd_fraction(l, top) for l in range(top + 2)]
    f = full.fractions
    for l in range(top + 1):
        lo, hi = bounds[l], bounds[l + 1]
        block = f[(f > lo + 1e-15) & (f <= hi + 1e-15)]
        rescaled = (block - lo)/(hi - lo)
        assert np.allclose(rescaled, inner[1:], atol=1e-12)


def test_to_dict():
    d = build_schedule(1, 1).to_dict()
    assert d['m'] == 1 and d['orders'] == [1, 1] and d['merged'] is False
    assert len(d['pulses']) == 4 and d['pulses'][-1]['ops'] == ['X1', 'Z1']
