"""
The discrete walk behind the vanishing coefficients.

The interval-space matrices ``D_beta`` act on the vector of interval widths
``u_L``; after ``n`` steps the amplitude on ``B_beta0 u_R`` must vanish for
``n <= N - 1``. In the sine-product basis ``chi_kappa`` every ``D_beta`` moves
each component ``k_r`` up by at most one, while ``u_L`` sits at ``(1, ..., 1)``
and the targets have ``k_r* = N + 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import orth

from .algebra import GeneratorLabel, all_labels
from .coeffs import TableMatrices
from .sequence import IntervalGrid

__all__ = [
    'chi_is_zero', 'ChiTransform', 'build_chi', 'd_in_chi', 'locality_violation',
    'WalkEndpoints', 'initial_and_target', 'WalkReport', 'verify_walk_zero',
    'walk_amplitudes', 'ExplorationMap', 'exploration_map',
]


def chi_is_zero(kappa: Sequence[int], N: int) -> bool:
    """Whether ``chi_kappa`` vanishes identically.

    The level-``r`` sine factor is zero on every interval exactly when
    ``k_r = 0`` with ``k_(r-1)`` odd, or ``k_r = N + 1`` with ``k_(r-1)`` even
    (``k_0 = 1``).
    """
    prev = 1
    for k in reversed(tuple(kappa)):
        if (k == 0 and prev % 2) or (k == N + 1 and prev % 2 == 0):
            return True
        prev = k
    return False


@dataclass(frozen=True, eq=False)
class ChiTransform:
    """Rows ``c_kappa`` over intervals, for every ``kappa`` in ``{0..N+1}^L``.

    ``basis`` holds the non-zero rows normalised to unit length, in the order
    of ``kappas[nonzero]``; it is an orthogonal ``Q x Q`` matrix.
    """

    N: int
    levels: int
    kappas: np.ndarray
    raw: np.ndarray
    zero: np.ndarray
    basis: np.ndarray = field(repr=False)

    @property
    def nonzero_kappas(self) -> np.ndarray:
        return self.kappas[~self.zero]

    @property
    def grid(self) -> IntervalGrid:
        return IntervalGrid.from_orders((self.N,)*self.levels)

    def to_chi(self, vec: np.ndarray) -> np.ndarray:
        return self.basis @ vec

    def from_chi(self, coords: np.ndarray) -> np.ndarray:
        return self.basis.T @ coords

    def conjugate(self, matrix: np.ndarray) -> np.ndarray:
        """Interval-space matrix (acting on columns) expressed in the chi basis."""
        return self.basis @ matrix @ self.basis.T

    def position(self, kappa: Sequence[int]) -> int:
        """Row of ``kappa`` in ``basis``."""
        hits = np.flatnonzero((self.nonzero_kappas == np.asarray(kappa)).all(axis=1))
        if not len(hits):
            raise KeyError(f'{tuple(kappa)} is not a non-zero chi index')
        return int(hits[0])


def build_chi(m: int, N: int, levels: int | None = None) -> ChiTransform:
    levels = 2*m if levels is None else levels
    if N < 1 or levels < 1:
        raise ValueError('need N >= 1 and at least one level')
    if (N + 1)**levels > 10**4:
        raise ValueError('chi transform limited to Q <= 10^4 intervals')
    kappas = np.array(list(itertools.product(range(N + 2), repeat=levels)))
    lams = np.array(list(itertools.product(range(N + 1), repeat=levels)))
    raw = np.ones((len(kappas), len(lams)))
    for i in range(levels):  # column i holds level r = levels - i
        k = kappas[:, i][:, None]
        k_prev = kappas[:, i + 1][:, None] if i + 1 < levels else 1
        l = lams[:, i][None, :]
        raw *= np.sin(((2*l + 1)*k + (N + 1)*(k_prev - 1))/(N + 1)*np.pi/2)
    zero = np.array([chi_is_zero(k, N) for k in kappas])
    rows = raw[~zero]
    basis = rows/np.linalg.norm(rows, axis=1)[:, None]
    for arr in (kappas, raw, zero, basis):
        arr.setflags(write=False)
    return ChiTransform(N, levels, kappas, raw, zero, basis)


def _walk_matrices(transform: ChiTransform) -> TableMatrices:
    return TableMatrices(transform.grid, degree=0)


def d_in_chi(beta: GeneratorLabel, transform: ChiTransform,
             mats: TableMatrices | None = None) -> np.ndarray:
    """``D_beta`` in the chi basis; entry ``[kappa', kappa]`` is the step amplitude."""
    mats = _walk_matrices(transform) if mats is None else mats
    return transform.conjugate(mats.D(beta))


def locality_violation(dchi: np.ndarray, transform: ChiTransform,
                       skip_boundary_sources: bool = False) -> float:
    """Largest ``|d[kappa', kappa]|`` with some ``k'_r > k_r + 1``.

    With ``skip_boundary_sources`` columns whose ``kappa`` already has a
    component equal to ``N + 1`` are ignored.
    """
    K = transform.nonzero_kappas
    far = (K[:, None, :] > K[None, :, :] + 1).any(axis=-1)
    if skip_boundary_sources:
        far &= ~(K == transform.N + 1).any(axis=1)[None, :]
    return float(np.abs(dchi[far]).max()) if far.any() else 0.0


def _target_mask(transform: ChiTransform, beta0: GeneratorLabel) -> np.ndarray:
    r_star = beta0.lowest_level
    return transform.nonzero_kappas[:, transform.levels - r_star] == transform.N + 1


@dataclass(frozen=True, eq=False)
class WalkEndpoints:
    initial: np.ndarray
    initial_leak: float
    target_mask: np.ndarray
    target: np.ndarray
    target_leak: float


def initial_and_target(beta0: GeneratorLabel, transform: ChiTransform,
                       mats: TableMatrices | None = None) -> WalkEndpoints:
    """Chi coordinates of ``u_L`` and ``B_beta0 u_R`` with their support checks.

    ``initial_leak`` is the relative weight of ``u_L`` away from ``(1, ..., 1)``;
    ``target_leak`` the relative weight of ``B u_R`` outside the target set.
    """
    if beta0.is_zero:
        raise ValueError('the target needs a non-zero total label')
    mats = _walk_matrices(transform) if mats is None else mats
    initial = transform.to_chi(mats.u_L)
    start = transform.position((1,)*transform.levels)
    off = np.delete(initial, start)
    mask = _target_mask(transform, beta0)
    target = transform.to_chi(mats.B(beta0) @ mats.u_R)
    return WalkEndpoints(
        initial=initial,
        initial_leak=float(np.linalg.norm(off)/np.linalg.norm(initial)),
        target_mask=mask,
        target=target,
        target_leak=float(np.linalg.norm(target[~mask])/np.linalg.norm(target)),
    )


@dataclass
class WalkReport:
    N: int
    levels: int
    max_steps: int
    passed: bool
    overlaps: list[float]
    support_sizes: list[int]
    first_reaching_step: int | None
    threshold_overlap: float
    trace: list[dict]

    def to_dict(self) -> dict:
        return {
            'N': self.N, 'levels': self.levels, 'max_steps': self.max_steps,
            'passed': self.passed, 'overlaps': self.overlaps,
            'support_sizes': self.support_sizes,
            'first_reaching_step': self.first_reaching_step,
            'threshold_overlap': self.threshold_overlap, 'trace': self.trace,
        }


def verify_walk_zero(m: int, N: int, max_steps: int | None = None,
                     levels: int | None = None, tolerance: float = 1e-10,
                     reach_threshold: float = 1e-6) -> WalkReport:
    """Check no walk of at most ``max_steps`` steps reaches a target.

    Two propagations are run one step past ``max_steps``:

    * the span of every product of ``D`` matrices applied to ``u_L`` in
      interval space, whose largest normalised overlap with ``B_beta0 u_R``
      over all ``beta0 != 0`` is recorded per step;
    * the chi-basis support reachable by any ``D_beta``, which must stay off
      the target set.
    """
    transform = build_chi(m, N, levels)
    L = transform.levels
    max_steps = N - 1 if max_steps is None else max_steps
    if not 0 <= max_steps <= N - 1:
        raise ValueError(f'max_steps must lie in 0..{N - 1}')
    mats = _walk_matrices(transform)
    labels = list(all_labels(L))
    Ds = [mats.D(b) for b in labels]
    Dchi = [transform.conjugate(D) for D in Ds]
    targets = {b: mats.B(b) @ mats.u_R for b in labels if not b.is_zero}
    target_any = np.zeros(len(transform.nonzero_kappas), bool)
    for b in targets:
        target_any |= _target_mask(transform, b)
    for b in targets:
        ends = initial_and_target(b, transform, mats)
        if ends.target_leak > tolerance:
            raise AssertionError(f'B_{b} u_R leaks {ends.target_leak:.2e} off its targets')

    span = orth(mats.u_L[:, None])
    support = np.zeros(len(transform.nonzero_kappas), bool)
    support[transform.position((1,)*L)] = True
    overlaps, sizes, trace = [], [], []
    first = None
    for step in range(max_steps + 2):
        if step:
            span = orth(np.hstack([span] + [D @ span for D in Ds]), rcond=1e-12)
            reach = np.zeros_like(support)
            for d in Dchi:
                scale = np.abs(d).max()
                reach |= (np.abs(d[:, support]) > tolerance*scale).any(axis=1)
            support |= reach
        worst_b, worst = None, 0.0
        for b, vec in targets.items():
            ov = float(np.linalg.norm(span.T @ vec)/np.linalg.norm(vec))
            if ov > worst:
                worst_b, worst = b, ov
        overlaps.append(worst)
        sizes.append(int(support.sum()))
        hit = bool((support & target_any).any())
        if first is None and worst > reach_threshold:
            first = step
        if step <= max_steps and (worst > tolerance or hit):
            trace.append({'step': step, 'beta0': str(worst_b), 'overlap': worst,
                          'support_hits_target': hit})
    return WalkReport(N, L, max_steps, passed=not trace, overlaps=overlaps[:max_steps + 1],
                      support_sizes=sizes[:max_steps + 1], first_reaching_step=first,
                      threshold_overlap=overlaps[max_steps + 1], trace=trace)


def walk_amplitudes(m: int, N: int, steps: int, levels: int | None = None) -> dict:
    """Amplitudes ``<B_b0 u_R| D_bn ... D_b1 |u_L>`` for every label sequence of length ``steps``.

    Plain interval-space products, no chi basis; keyed by ``(b0, (b1..bn))``.
    """
    L = 2*m if levels is None else levels
    mats = TableMatrices(IntervalGrid.from_orders((N,)*L), degree=0)
    labels = list(all_labels(L))
    out = {}
    for seq in itertools.product(labels, repeat=steps):
        vec = mats.u_L
        for b in seq:
            vec = mats.D(b) @ vec
        for b0 in labels:
            if not b0.is_zero:
                out[b0, seq] = float((mats.B(b0) @ mats.u_R) @ vec)
    return out


_LEGEND = {'start': 'S', 'explored': 'X', 'target': '#', 'hit': '@', 'none': '.'}


@dataclass
class ExplorationMap:
    """Cumulative explored chi indices after each step of a fixed walk."""

    N: int
    levels: int
    betas: list[GeneratorLabel]
    explored: list[list[tuple[int, ...]]]
    zero_kappas: list[tuple[int, ...]]

    def symbol(self, kappa: tuple[int, ...], step: int) -> str:
        if kappa in self._zero:
            return ' '
        target = self.N + 1 in kappa
        if kappa == (1,)*self.levels:
            return _LEGEND['start']
        seen = kappa in self._explored_sets[step]
        if target:
            return _LEGEND['hit'] if seen else _LEGEND['target']
        return _LEGEND['explored'] if seen else _LEGEND['none']

    def __post_init__(self):
        self._zero = set(self.zero_kappas)
        self._explored_sets = [set(e) for e in self.explored]

    def render(self, step: int) -> str:
        """ASCII grid; rows are ``k_2`` and columns ``k_1`` for two levels."""
        ks = range(self.N + 2)
        if self.levels == 1:
            return ' '.join(self.symbol((k,), step) for k in ks)
        if self.levels == 2:
            header = 'k2\\k1 ' + ' '.join(str(k % 10) for k in ks)
            rows = [f'{k2:>5} ' + ' '.join(self.symbol((k2, k1), step) for k1 in ks)
                    for k2 in ks]
            return '\n'.join([header] + rows)
        raise ValueError('ASCII rendering needs one or two levels; use to_dict()')

    def to_dict(self) -> dict:
        return {
            'N': self.N, 'levels': self.levels,
            'betas': [str(b) for b in self.betas],
            'steps': {str(i): [list(k) for k in e] for i, e in enumerate(self.explored)},
            'zero_kappas': [list(k) for k in self.zero_kappas],
        }


def exploration_map(m: int, N: int, betas: GeneratorLabel | Sequence[GeneratorLabel],
                    steps: int, levels: int | None = None,
                    tolerance: float = 1e-10) -> ExplorationMap:
    """Follow ``u_L`` under ``D_beta`` (one label per step, or one label for all)."""
    transform = build_chi(m, N, levels)
    if isinstance(betas, GeneratorLabel):
        betas = [betas]*steps
    betas = list(betas)
    if len(betas) != steps:
        raise ValueError('need one label per step')
    mats = _walk_matrices(transform)
    K = [tuple(int(x) for x in k) for k in transform.nonzero_kappas]
    state = transform.to_chi(mats.u_L)
    seen = np.abs(state) > tolerance*np.abs(state).max()
    explored = [sorted(K[i] for i in np.flatnonzero(seen))]
    for b in betas:
        state = d_in_chi(b, transform, mats) @ state
        seen |= np.abs(state) > tolerance*np.abs(state).max()
        explored.append(sorted(K[i] for i in np.flatnonzero(seen)))
    zero = [tuple(int(x) for x in k) for k in transform.kappas[transform.zero]]
    return ExplorationMap(N, transform.levels, betas, explored, zero)
