"""
Pulse timings and schedules for UDD, QDD and nested UDD.

Level ``r`` of an ``L``-level nesting runs a UDD sequence of order ``N_r``
inside every interval of level ``r + 1``. Interval and pulse labels are
mixed-radix multi-indices ``(l_L, ..., l_1)`` with ``l_1`` varying fastest,
so the linear index is ``sum_r l_r (N_r + 1)^(r-1)`` for uniform orders.

Orders are always given level-1 first, ``(N_1, ..., N_L)``; multi-indices and
generator labels are written highest level first. For ``m`` qubits the
pulse of level ``2j - 1`` is ``X`` on qubit ``j`` and of level ``2j`` is ``Z``
on qubit ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import GeneratorLabel, PAULI, pauli_from_names, pauli_multiply, xor_add

__all__ = [
    'udd_fraction', 'nudd_fraction', 'expand_orders', 'IntervalGrid',
    'Pulse', 'PulseSchedule', 'build_schedule', 'modulation_sign',
    'ModulationFunction', 'evaluate_F', 'level_operator', 'to_linear',
    'from_linear', 'successor',
]


def udd_fraction(index: int, order: int) -> float:
    """``sin^2(index pi / (2 (order + 1)))`` for ``0 <= index <= order + 1``."""
    if order < 0:
        raise ValueError(f'order must be non-negative, got {order}')
    if not 0 <= index <= order + 1:
        raise ValueError(f'UDD index {index} outside 0..{order + 1}')
    if index == 0:
        return 0.0
    if index == order + 1:
        return 1.0
    return math.sin(index*math.pi/(2*(order + 1)))**2


def _udd_table(order: int) -> np.ndarray:
    return np.array([udd_fraction(i, order) for i in range(order + 2)])


def expand_orders(orders: int | Sequence[int], levels: int) -> tuple[int, ...]:
    """Expand a uniform order to ``levels`` copies, or validate a per-level list."""
    if isinstance(orders, (int, np.integer)):
        orders = (int(orders),)*levels
    orders = tuple(int(n) for n in orders)
    if len(orders) != levels:
        raise ValueError(f'expected {levels} orders, got {len(orders)}')
    if any(n < 1 for n in orders):
        raise ValueError(f'every order must be >= 1, got {orders}')
    return orders


def _radices(orders: Sequence[int]) -> tuple[int, ...]:
    # component order (l_L, ..., l_1)
    return tuple(n + 1 for n in reversed(orders))


def to_linear(components: Sequence[int], orders: Sequence[int]) -> int:
    return int(np.ravel_multi_index(tuple(components), _radices(orders)))


def from_linear(index: int, orders: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(c) for c in np.unravel_index(index, _radices(orders)))


def successor(components: Sequence[int], orders: Sequence[int]) -> tuple[int, ...]:
    """Next interval label, carrying into higher levels."""
    return from_linear(to_linear(components, orders) + 1, orders)


def nudd_fraction(components: Sequence[int], orders: Sequence[int]) -> float:
    """Nested fraction for a multi-index ``(l_L, ..., l_1)``.

    ``l_1`` may run over ``0..N_1 + 1`` so that both interval starts and
    pulse positions are addressable; higher components run over ``0..N_r``.
    """
    orders = tuple(orders)
    if len(components) != len(orders):
        raise ValueError('index and orders have different lengths')
    comps = tuple(reversed(components))  # level 1 first
    for r, (l, n) in enumerate(zip(comps, orders), start=1):
        hi = n + 1 if r == 1 else n
        if not 0 <= l <= hi:
            raise ValueError(f'component l_{r}={l} outside 0..{hi}')
    frac = udd_fraction(comps[0], orders[0])
    for l, n in zip(comps[1:], orders[1:]):
        lo, up = udd_fraction(l, n), udd_fraction(l + 1, n)
        frac = lo + (up - lo)*frac
    return frac


@dataclass(frozen=True, eq=False)
class IntervalGrid:
    """The ``Q`` intervals ``(Delta_lambda, Delta_lambda+1]`` of a nesting.

    ``breakpoints`` has ``Q + 1`` entries from 0 to 1; ``components[k]`` is the
    multi-index of interval ``k``.
    """

    orders: tuple[int, ...]
    breakpoints: np.ndarray
    components: np.ndarray

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> IntervalGrid:
        orders = tuple(int(n) for n in orders)
        if not orders or any(n < 1 for n in orders):
            raise ValueError(f'invalid orders {orders}')
        starts = _udd_table(orders[0])[:-1]
        for n in orders[1:]:
            d = _udd_table(n)
            starts = np.concatenate([d[l] + (d[l + 1] - d[l])*starts for l in range(n + 1)])
        radices = _radices(orders)
        comps = np.array(np.unravel_index(np.arange(len(starts)), radices)).T
        return cls(orders, np.append(starts, 1.0), comps)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or len(bp) != len(self.components) + 1:
            raise ValueError('need Q + 1 breakpoints for Q intervals')
        if np.any(np.diff(bp) <= 0):
            raise ValueError('breakpoints must be strictly increasing')
        bp.setflags(write=False)
        object.__setattr__(self, 'breakpoints', bp)

    @property
    def levels(self) -> int:
        return len(self.orders)

    @property
    def Q(self) -> int:
        return len(self.components)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def signs(self, beta: GeneratorLabel) -> np.ndarray:
        """``(-1)^(beta . lambda)`` for every interval."""
        if len(beta) != self.levels:
            raise ValueError(f'label has {len(beta)} bits, grid has {self.levels} levels')
        return 1.0 - 2.0*((self.components @ np.array(beta.bits)) % 2)

    def interval_of(self, t: float) -> int:
        if not 0 <= t <= 1:
            raise ValueError(f't={t} outside (0, 1]')
        return max(int(np.searchsorted(self.breakpoints, t, side='left')) - 1, 0)

    def perturbed(self, position: int, shift: float) -> IntervalGrid:
        """Copy with interior breakpoint ``position`` moved by ``shift``."""
        if not 0 < position < self.Q:
            raise ValueError('only interior breakpoints can be moved')
        bp = self.breakpoints.copy()
        bp[position] += shift
        return IntervalGrid(self.orders, bp, self.components)


def level_operator(level: int) -> str:
    """Pulse name for a nesting level: ``X<j>`` for odd levels, ``Z<j>`` for even."""
    j = (level + 1)//2
    return f'{"X" if level % 2 else "Z"}{j}'


def _pulse_levels(components: Sequence[int], orders: Sequence[int]) -> list[int]:
    """Levels whose raw pulses fire at a pulse label, level 1 first.

    A label with ``l_1 <= N_1`` fires level 1 only. When ``l_1 = N_1 + 1`` the
    level-1 block ends, contributing ``Omega_1^N_1``, and the roll-over climbs
    through every level sitting at its last interval ``l_r = N_r``; the first
    level not at its end contributes one pulse.
    """
    comps = tuple(reversed(components))
    if comps[0] <= orders[0]:
        return [1]
    fired = [1]*(orders[0] % 2)
    for r in range(2, len(orders) + 1):
        if comps[r - 1] != orders[r - 1]:
            return fired + [r]
        fired += [r]*(orders[r - 1] % 2)
    return fired


@dataclass(frozen=True)
class Pulse:
    """Instantaneous pulse at ``fraction`` of the total time.

    ``ops`` are in application order; the unitary is ``ops[-1] ... ops[0]``
    times ``phase``.
    """

    fraction: float
    ops: tuple[str, ...]
    phase: complex = 1
    label: tuple[int, ...] | None = None

    def unitary(self, m: int) -> np.ndarray:
        u = np.eye(2**m, dtype=complex)
        for op in self.ops:
            u = _embed(op, m) @ u
        return self.phase*u

    @property
    def is_identity(self) -> bool:
        return not self.ops


def _embed(op: str, m: int) -> np.ndarray:
    name, qubit = op[0], int(op[1:])
    if not 1 <= qubit <= m:
        raise ValueError(f'{op} acts outside {m} qubits')
    out = np.eye(1, dtype=complex)
    for j in range(m, 0, -1):
        out = np.kron(out, PAULI[name] if j == qubit else PAULI['I'])
    return out


def _merge(ops: Sequence[str], m: int) -> tuple[tuple[str, ...], complex, GeneratorLabel]:
    label, phase = GeneratorLabel.zero(2*m), 1 + 0j
    for op in ops:
        names = ['I']*m
        names[m - int(op[1:])] = op[0]
        # left-multiply: later ops act after earlier ones
        label, ph = pauli_multiply(pauli_from_names(''.join(names)), label)
        phase *= ph
    merged = []
    for j in range(m, 0, -1):
        pair = label.bit(2*j), label.bit(2*j - 1)
        name = {(1, 0): 'X', (1, 1): 'Y', (0, 1): 'Z'}.get(pair)
        if name:
            merged.append(f'{name}{j}')
    return tuple(merged), phase, label


@dataclass(frozen=True)
class PulseSchedule:
    m: int
    orders: tuple[int, ...]
    pulses: tuple[Pulse, ...]
    merged: bool

    @property
    def fractions(self) -> np.ndarray:
        return np.array([p.fraction for p in self.pulses])

    def __len__(self) -> int:
        return len(self.pulses)

    def total_unitary(self) -> np.ndarray:
        u = np.eye(2**self.m, dtype=complex)
        for p in self.pulses:
            u = p.unitary(self.m) @ u
        return u

    def to_dict(self) -> dict:
        return {
            'm': self.m,
            'orders': list(self.orders),
            'merged': self.merged,
            'pulses': [
                {'fraction': p.fraction, 'ops': list(p.ops),
                 **({'label': list(p.label)} if p.label is not None else {})}
                for p in self.pulses
            ],
        }


def build_schedule(m: int, orders: int | Sequence[int], merged: bool = False,
                   levels: int | None = None) -> PulseSchedule:
    """Nested UDD schedule for ``m`` qubits.

    The unmerged schedule has one entry per pulse label, ``Q = prod(N_r + 1)``
    entries, each listing the raw level pulses that coincide there (possibly
    none, e.g. the final label for even orders). The merged schedule
    multiplies coincident pulses into one tensor-Pauli per instant and drops
    instants whose product is the identity.
    """
    if m < 1:
        raise ValueError(f'need m >= 1, got {m}')
    levels = 2*m if levels is None else levels
    if not 1 <= levels <= 2*m:
        raise ValueError(f'levels must lie in 1..{2*m}')
    orders = expand_orders(orders, levels)
    pulses = []
    for idx in np.ndindex(*_radices(orders)):
        comps = idx[:-1] + (idx[-1] + 1,)  # l_1 runs 1..N_1+1 for pulses
        ops = tuple(level_operator(r) for r in _pulse_levels(comps, orders))
        frac = nudd_fraction(comps, orders)
        if merged:
            ops, phase, _ = _merge(ops, m)
            if not ops:
                continue
            pulses.append(Pulse(frac, ops, phase, comps))
        else:
            pulses.append(Pulse(frac, ops, 1, comps))
    return PulseSchedule(m, orders, tuple(pulses), merged)


def modulation_sign(alpha: GeneratorLabel, components: Sequence[int]) -> int:
    """``(-1)^(sum_r a_r l_r)``."""
    return -1 if alpha.dot(components) % 2 else 1


@dataclass(frozen=True, eq=False)
class ModulationFunction:
    """Piecewise-constant toggling-frame sign ``F_alpha(t)`` on a grid."""

    generator: GeneratorLabel
    grid: IntervalGrid
    signs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'signs', self.grid.signs(self.generator))

    def __call__(self, t: float) -> int:
        if not 0 < t <= 1:
            raise ValueError(f't={t} outside (0, 1]')
        return int(self.signs[self.grid.interval_of(t)])

    def __mul__(self, other: ModulationFunction) -> ModulationFunction:
        return ModulationFunction(xor_add(self.generator, other.generator), self.grid)


def evaluate_F(alpha: GeneratorLabel, t: float, orders: Sequence[int]) -> int:
    """Sign of the modulation function for ``alpha`` at time fraction ``t``."""
    return ModulationFunction(alpha, IntervalGrid.from_orders(orders))(t)
