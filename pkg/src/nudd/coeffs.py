"""
Dyson-series coefficients of a pulse grid, computed two independent ways.

The coefficient for generators ``(alpha_1, ..., alpha_s)`` and powers
``(p_1, ..., p_s)`` is the time-ordered integral

.. math::

    \\int_0^1 dt_s \\cdots \\int_0^{t_2} dt_1 \\prod_j F_{\\alpha_j}(t_j) t_j^{p_j}.

:func:`coefficient_via_matrices` evaluates it as a vector-matrix product in
the basis of piecewise monomials ``eta_{q,lambda}(t) = t^q`` on interval
``lambda``; :func:`coefficient_via_oracle` antidifferentiates piecewise
polynomials in closed form. :func:`verify_vanishing` checks that every
coefficient acting non-trivially on the system vanishes up to the
suppression order.

Matrices follow the convention ``O . eta_i = sum_j O[i, j] eta_j``, so a
function with coefficient row vector ``c`` maps to ``c @ O``.
"""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from ._workers import worker_count
from .algebra import GeneratorLabel, all_labels, xor_add
from .sequence import IntervalGrid

__all__ = [
    'EtaBasis', 'TableMatrices', 'PiecewisePolynomial', 'CoefficientQuery',
    'build_matrices', 'coefficient_via_matrices', 'coefficient_scale',
    'coefficient_via_oracle', 'enumerate_queries', 'VanishingReport',
    'verify_vanishing', 'find_nonvanishing',
]


@dataclass(frozen=True)
class EtaBasis:
    """Index map ``(q, lambda) <-> q*Q + lambda`` for ``q = 0..degree``."""

    Q: int
    degree: int

    @property
    def dim(self) -> int:
        return (self.degree + 1)*self.Q

    def index(self, q: int, lam: int) -> int:
        if not (0 <= q <= self.degree and 0 <= lam < self.Q):
            raise IndexError((q, lam))
        return q*self.Q + lam

    def split(self, flat: int) -> tuple[int, int]:
        return divmod(flat, self.Q)


@dataclass(frozen=True)
class CoefficientQuery:
    """Generators ``(alpha_1..alpha_s)`` and powers ``(p_1..p_s)``, innermost first."""

    alphas: tuple[GeneratorLabel, ...]
    powers: tuple[int, ...]

    def __post_init__(self):
        if not self.alphas or len(self.alphas) != len(self.powers):
            raise ValueError('need s >= 1 generators and as many powers')
        if any(p < 0 for p in self.powers):
            raise ValueError('powers must be non-negative')
        if len({len(a) for a in self.alphas}) != 1:
            raise ValueError('generator labels have mixed lengths')

    @property
    def s(self) -> int:
        return len(self.alphas)

    @property
    def order(self) -> int:
        """``s + sum(p_j)``, the power of ``T`` this term carries."""
        return self.s + sum(self.powers)

    @property
    def betas(self) -> tuple[GeneratorLabel, ...]:
        """``beta_j = alpha_(j+1) ^ ... ^ alpha_s`` for ``j = 0..s-1``.

        ``beta_0`` is the total label; ``beta_j`` is the sign carried across
        the ``j``-th integration when the product of modulation functions is
        folded inward.
        """
        out, acc = [], GeneratorLabel.zero(len(self.alphas[0]))
        for a in reversed(self.alphas):
            acc = xor_add(acc, a)
            out.append(acc)
        return tuple(reversed(out))

    def to_dict(self) -> dict:
        return {'alphas': [str(a) for a in self.alphas], 'powers': list(self.powers)}


class TableMatrices:
    """Dense operator matrices on the ``eta`` basis of a grid.

    ``M`` multiplies by ``t``; ``F(beta)`` multiplies by the modulation
    function; ``G(beta)`` is ``f -> F_beta(t) int_0^t F_beta f``. ``v_L`` integrates
    over ``[0, 1]`` and ``v_R`` represents the constant function 1.
    """

    def __init__(self, grid: IntervalGrid, degree: int):
        if degree < 0:
            raise ValueError('degree must be non-negative')
        self.grid = grid
        self.basis = EtaBasis(grid.Q, degree)
        self._cache: dict[tuple[str, GeneratorLabel], np.ndarray] = {}
        Q, dim = grid.Q, self.basis.dim
        bp = grid.breakpoints

        self.M = np.eye(dim, k=Q)
        q = np.arange(degree + 1)[:, None]
        self.v_L = ((bp[1:]**(q + 1) - bp[:-1]**(q + 1))/(q + 1)).ravel()
        self.v_R = np.zeros(dim)
        self.v_R[:Q] = 1.0
        self.u_L = np.diff(bp)
        self.u_R = np.ones(Q)

    @property
    def degree(self) -> int:
        return self.basis.degree

    def _cached(self, kind: str, beta: GeneratorLabel, make) -> np.ndarray:
        key = (kind, beta)
        if key not in self._cache:
            mat = make(beta)
            mat.setflags(write=False)
            self._cache[key] = mat
        return self._cache[key]

    def B(self, beta: GeneratorLabel) -> np.ndarray:
        return self._cached('B', beta, lambda b: np.diag(self.grid.signs(b)))

    def D(self, beta: GeneratorLabel) -> np.ndarray:
        def make(b):
            bp, s = self.grid.breakpoints, self.grid.signs(b)
            Q = self.grid.Q
            upper = np.triu(np.ones((Q, Q)), k=1)
            return np.diag(bp[:-1]) - ((bp[1:] - bp[:-1])*s)[:, None]*s[None, :]*upper
        return self._cached('D', beta, make)

    def F(self, beta: GeneratorLabel) -> np.ndarray:
        return self._cached('F', beta,
                            lambda b: np.kron(np.eye(self.degree + 1), self.B(b)))

    def G(self, beta: GeneratorLabel) -> np.ndarray:
        def make(b):
            Q, n = self.grid.Q, self.degree
            out = np.zeros((self.basis.dim, self.basis.dim))
            d_pow = np.eye(Q)
            D = self.D(b)
            for q in range(n + 1):
                d_pow = d_pow @ D
                rows = slice(q*Q, (q + 1)*Q)
                if q < n:
                    out[rows, (q + 1)*Q:(q + 2)*Q] += np.eye(Q)/(q + 1)
                out[rows, :Q] -= d_pow/(q + 1)
            return out
        return self._cached('G', beta, make)

    def top_weight(self, vec: np.ndarray) -> float:
        """Largest coefficient magnitude on the highest polynomial label."""
        return float(np.max(np.abs(vec[self.degree*self.grid.Q:])))


def build_matrices(grid: IntervalGrid, degree: int | None = None) -> TableMatrices:
    """All basis operators for ``grid`` with polynomial labels ``0..degree``.

    ``degree`` defaults to the smallest level order ``N*``.
    """
    return TableMatrices(grid, min(grid.orders) if degree is None else degree)


def _check_degree(query: CoefficientQuery, mats: TableMatrices):
    # the integrand before the final v_L contraction has degree order - 1
    if query.order - 1 > mats.degree:
        raise ValueError(
            f'query of order {query.order} exceeds basis degree {mats.degree}; '
            'build the matrices with a larger degree')
    if len(query.alphas[0]) != mats.grid.levels:
        raise ValueError('generator length does not match the number of levels')


def _product(query: CoefficientQuery, mats: TableMatrices, absolute: bool) -> float:
    f = np.abs if absolute else (lambda x: x)
    betas = query.betas
    vec = f(mats.v_R) @ f(mats.F(betas[0]))
    M = f(mats.M)
    for j, p in enumerate(query.powers):
        for _ in range(p):
            if not absolute and mats.top_weight(vec):
                raise AssertionError('polynomial degree left the basis')
            vec = vec @ M
        if j + 1 < query.s:
            vec = vec @ f(mats.G(betas[j + 1]))
    return float(vec @ f(mats.v_L))


def coefficient_via_matrices(query: CoefficientQuery, mats: TableMatrices) -> float:
    """``v_R F_b0 M^p1 G_b1 M^p2 ... G_b(s-1) M^ps v_L`` for ``query``."""
    _check_degree(query, mats)
    return _product(query, mats, absolute=False)


def coefficient_scale(query: CoefficientQuery, mats: TableMatrices) -> float:
    """The same product with every matrix and vector replaced by its absolute value."""
    _check_degree(query, mats)
    return _product(query, mats, absolute=True)


class PiecewisePolynomial:
    """Polynomials in global ``t`` on each interval of a breakpoint list.

    ``coef[k]`` holds power-basis coefficients (constant first) for interval
    ``k``.
    """

    def __init__(self, breakpoints: np.ndarray, coef: np.ndarray):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.coef = np.atleast_2d(np.asarray(coef, dtype=float))
        if len(self.coef) != len(self.breakpoints) - 1:
            raise ValueError('one coefficient row per interval is required')

    @classmethod
    def constant(cls, breakpoints: np.ndarray, value: float = 1.0) -> PiecewisePolynomial:
        return cls(breakpoints, np.full((len(breakpoints) - 1, 1), value))

    @property
    def degree(self) -> int:
        return self.coef.shape[1] - 1

    def times_monomial(self, power: int) -> PiecewisePolynomial:
        pad = np.zeros((len(self.coef), power))
        return PiecewisePolynomial(self.breakpoints, np.hstack([pad, self.coef]))

    def times_signs(self, signs: np.ndarray) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.breakpoints, self.coef*np.asarray(signs)[:, None])

    def antiderivative(self) -> PiecewisePolynomial:
        """Continuous antiderivative vanishing at the first breakpoint."""
        prim = P.polyint(self.coef, axis=1)
        bp = self.breakpoints
        left = P.polyval(bp[:-1], prim.T, tensor=False)
        right = P.polyval(bp[1:], prim.T, tensor=False)
        # value carried into interval k is the accumulated integral up to bp[k]
        carried = np.concatenate([[0.0], np.cumsum(right - left)[:-1]])
        prim[:, 0] += carried - left
        return PiecewisePolynomial(bp, prim)

    def __call__(self, t: float) -> float:
        k = min(max(int(np.searchsorted(self.breakpoints, t, side='left')) - 1, 0),
                len(self.coef) - 1)
        return float(P.polyval(t, self.coef[k]))

    def integral(self) -> float:
        return self.antiderivative()(self.breakpoints[-1])


def coefficient_via_oracle(query: CoefficientQuery, grid: IntervalGrid) -> float:
    """Exact nested integral by repeated closed-form antidifferentiation."""
    if query.order > 30:
        raise ValueError('oracle limited to total degree 30')
    g = PiecewisePolynomial.constant(grid.breakpoints)
    for alpha, p in zip(query.alphas, query.powers):
        g = g.times_signs(grid.signs(alpha)).times_monomial(p).antiderivative()
    return g(grid.breakpoints[-1])


def enumerate_queries(generators: Sequence[GeneratorLabel], max_order: int,
                      nontrivial_only: bool = True,
                      min_order: int = 1) -> Iterator[CoefficientQuery]:
    """All queries with ``min_order <= s + sum(p) <= max_order``.

    Grouped by ``(s, sum(p))``. With ``nontrivial_only`` the total label
    ``beta_0`` must be non-zero.
    """
    generators = tuple(generators)
    for order in range(min_order, max_order + 1):
        for s in range(1, order + 1):
            total = order - s
            # compositions of `total` into s non-negative parts
            for cuts in itertools.combinations(range(total + s - 1), s - 1):
                bounds = (-1,) + cuts + (total + s - 1,)
                powers = tuple(bounds[i + 1] - bounds[i] - 1 for i in range(s))
                for alphas in itertools.product(generators, repeat=s):
                    if nontrivial_only and _xor_all(alphas).is_zero:
                        continue
                    yield CoefficientQuery(alphas, powers)


def _xor_all(alphas: Iterable[GeneratorLabel]) -> GeneratorLabel:
    alphas = tuple(alphas)
    acc = GeneratorLabel.zero(len(alphas[0]))
    for a in alphas:
        acc = xor_add(acc, a)
    return acc


@dataclass
class VanishingReport:
    passed: bool
    max_abs: float
    max_ratio: float
    worst_query: CoefficientQuery | None
    worst_value: float
    query_count: int
    truncated: bool
    tolerance: float
    max_order: int
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'max_abs': self.max_abs,
            'max_ratio': self.max_ratio,
            'worst_query': None if self.worst_query is None else {
                **self.worst_query.to_dict(), 'value': self.worst_value},
            'query_count': self.query_count,
            'truncated': self.truncated,
            'tolerance': self.tolerance,
            'max_order': self.max_order,
            'wall_time': self.wall_time,
        }


def _evaluate_chunk(chunk, mats):
    best = (-1.0, 0.0, None, 0.0)  # ratio, |value|, query, value
    max_abs = 0.0
    for query in chunk:
        value = coefficient_via_matrices(query, mats)
        scale = coefficient_scale(query, mats)
        ratio = abs(value)/scale if scale > 0 else (math.inf if value else 0.0)
        max_abs = max(max_abs, abs(value))
        if ratio > best[0]:
            best = (ratio, abs(value), query, value)
    return max_abs, best


def verify_vanishing(grid: IntervalGrid,
                     generators: Sequence[GeneratorLabel] | None = None,
                     tolerance: float = 1e-10,
                     max_queries: int | None = None,
                     max_order: int | None = None,
                     workers: int | None = None) -> VanishingReport:
    """Check every non-trivial coefficient up to the suppression order vanishes.

    The suppression order defaults to the smallest level order. A query
    fails when ``|F| > tolerance * scale`` with ``scale`` from
    :func:`coefficient_scale`. Failures are reported, not raised.
    """
    start = time.perf_counter()
    generators = tuple(all_labels(grid.levels)) if generators is None else tuple(generators)
    order = min(grid.orders) if max_order is None else max_order
    mats = build_matrices(grid, degree=order)
    queries = enumerate_queries(generators, order)
    queries = list(itertools.islice(queries, max_queries + 1)
                   if max_queries is not None else queries)
    truncated = max_queries is not None and len(queries) > max_queries
    if truncated:
        queries = queries[:max_queries]

    n_workers = worker_count(workers)
    size = max(1, math.ceil(len(queries)/(4*n_workers)))
    chunks = [queries[i:i + size] for i in range(0, len(queries), size)]
    # warm the per-beta cache so worker threads only read it
    for b in {b for q in queries for b in q.betas}:
        mats.F(b)
        mats.G(b)
    if n_workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(lambda c: _evaluate_chunk(c, mats), chunks))
    else:
        results = [_evaluate_chunk(c, mats) for c in chunks]

    max_abs = max((r[0] for r in results), default=0.0)
    ratio, _, worst, value = max((r[1] for r in results), key=lambda b: b[0],
                                 default=(0.0, 0.0, None, 0.0))
    return VanishingReport(
        passed=ratio <= tolerance, max_abs=max_abs, max_ratio=max(ratio, 0.0),
        worst_query=worst, worst_value=value, query_count=len(queries),
        truncated=truncated, tolerance=tolerance, max_order=order,
        wall_time=time.perf_counter() - start)


def find_nonvanishing(grid: IntervalGrid, order: int,
                      generators: Sequence[GeneratorLabel] | None = None,
                      tolerance: float = 1e-10) -> tuple[CoefficientQuery, float] | None:
    """First non-trivial query of exactly ``order`` whose coefficient is non-zero."""
    generators = tuple(all_labels(grid.levels)) if generators is None else tuple(generators)
    mats = build_matrices(grid, degree=order - 1)
    for query in enumerate_queries(generators, order, min_order=order):
        value = coefficient_via_matrices(query, mats)
        if abs(value) > tolerance*coefficient_scale(query, mats):
            return query, value
    return None
