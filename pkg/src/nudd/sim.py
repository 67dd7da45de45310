"""
Dense simulation of ``m`` qubits coupled to a ``d``-level bath under a pulse schedule.

The Hamiltonian is ``H(tau) = sum_alpha S_alpha x B_alpha(tau)`` with polynomial
bath operators ``B_alpha(tau) = sum_p b_(alpha,p) tau^p``. Free evolution
between pulses is integrated with exponential product formulas; pulses are
instantaneous.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import polar
from scipy.stats import unitary_group

from .algebra import all_labels, pauli_of
from .sequence import PulseSchedule, build_schedule

__all__ = [
    'BathModel', 'random_bath', 'EvolutionResult', 'NumericalError', 'evolve',
    'decoupling_error', 'ScalingFit', 'scaling_fit', 'default_t_list',
]

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """Integration drifted away from unitarity."""


@dataclass(frozen=True, eq=False)
class BathModel:
    """Bath operators ``coeffs[alpha, p]`` (``d x d`` Hermitian) for every generator.

    ``alpha`` is indexed by ``int(label)``, i.e. level-1 bit least significant.
    """

    m: int
    d: int
    coeffs: np.ndarray
    bound: float

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def dim(self) -> int:
        return 2**self.m*self.d

    def bath_operator(self, alpha: int, tau: float) -> np.ndarray:
        powers = tau**np.arange(self.degree + 1)
        return np.tensordot(powers, self.coeffs[alpha], axes=1)

    def coupling_terms(self) -> np.ndarray:
        """``S_alpha x b_(alpha,p)`` stacked as ``(4^m, P + 1, dim, dim)``."""
        paulis = [pauli_of(lab).matrix for lab in all_labels(2*self.m)]
        idx = [int(lab) for lab in all_labels(2*self.m)]
        out = np.empty((4**self.m, self.degree + 1, self.dim, self.dim), dtype=complex)
        for S, a in zip(paulis, idx):
            for p in range(self.degree + 1):
                out[a, p] = np.kron(S, self.coeffs[a, p])
        return out

    def hamiltonian(self, tau: float) -> np.ndarray:
        terms = self.coupling_terms()
        return np.einsum('p,apij->ij', tau**np.arange(self.degree + 1), terms)


def random_bath(m: int, d: int, degree: int = 2, seed: int = 0, bound: float = 1.0,
                generators: Sequence[int] | None = None) -> BathModel:
    """Seeded random Hermitian bath with every ``||b_(alpha,p)|| <= bound``.

    ``generators`` restricts the non-zero couplings to the given ``int(label)``
    values; by default all ``4^m`` generators couple.
    """
    if d < 1 or degree < 0 or bound < 0:
        raise ValueError('need d >= 1, degree >= 0 and bound >= 0')
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((4**m, degree + 1, d, d), dtype=complex)
    keep = set(range(4**m) if generators is None else generators)
    for a in range(4**m):
        for p in range(degree + 1):
            A = rng.normal(size=(d, d)) + 1j*rng.normal(size=(d, d))
            H = (A + A.conj().T)/2
            scale = rng.uniform(0.5, 1.0)
            if a in keep:
                coeffs[a, p] = bound*scale*H/np.linalg.norm(H, 2)
    coeffs.setflags(write=False)
    return BathModel(m, d, coeffs, bound)


def decoupling_error(U: np.ndarray, m: int, d: int) -> float:
    """Spectral distance from ``U`` to ``I x V``, ``V`` the polar part of ``tr_S U / 2^m``."""
    n = 2**m
    W = np.einsum('iaib->ab', U.reshape(n, d, n, d))/n
    if np.linalg.svd(W, compute_uv=False).min() < 1e-8:
        warnings.warn('degenerate reduced bath operator; using sampled bath unitaries',
                      RuntimeWarning, stacklevel=2)
        rng = np.random.default_rng(0)
        candidates = [unitary_group.rvs(d, random_state=rng) for _ in range(256)]
        if d == 1:
            candidates = [np.exp(1j*np.angle(W))]
        return min(np.linalg.norm(U - np.kron(np.eye(n), V), 2) for V in candidates)
    V, _ = polar(W)
    return float(np.linalg.norm(U - np.kron(np.eye(n), V), 2))


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    T: float
    U: np.ndarray
    epsilon: float
    frame: str


def _exp_hermitian(H: np.ndarray, h: float) -> np.ndarray:
    """``exp(-i h H)`` for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(H)
    return np.einsum('...ij,...j,...kj->...ik', v, np.exp(-1j*h*w), v.conj())


_GAUSS = np.array([0.5 - np.sqrt(3)/6, 0.5 + np.sqrt(3)/6])


def _interval_propagator(terms: np.ndarray, signs: np.ndarray, t0: float, t1: float,
                         substeps: int, method: str) -> np.ndarray:
    """Time-ordered propagator over physical times ``[t0, t1]``."""
    # signs weight each generator; terms are (4^m, P+1, D, D)
    K = np.einsum('a,apij->pij', signs, terms)
    h = (t1 - t0)/substeps
    starts = t0 + h*np.arange(substeps)
    powers = np.arange(K.shape[0])
    if method == 'midpoint':
        H = np.einsum('np,pij->nij', (starts + h/2)[:, None]**powers, K)
        steps = _exp_hermitian(H, h)
    elif method == 'magnus4':
        H1, H2 = (np.einsum('np,pij->nij', (starts + c*h)[:, None]**powers, K)
                  for c in _GAUSS)
        comm = H2 @ H1 - H1 @ H2
        steps = _exp_hermitian((H1 + H2)/2 - 1j*np.sqrt(3)/12*h*comm, h)
    else:
        raise ValueError(f'unknown method {method!r}')
    U = np.eye(K.shape[-1], dtype=complex)
    for step in steps:
        U = step @ U
    return U


def _toggling_signs(P: np.ndarray, paulis: list[np.ndarray]) -> np.ndarray:
    # P^dag S P = sign * S for Pauli products
    n = P.shape[0]
    return np.array([np.real(np.trace(P.conj().T @ S @ P @ S))/n for S in paulis])


def evolve(model: BathModel, schedule: PulseSchedule | None, T: float,
           substeps: int = 64, frame: str = 'lab', method: str = 'magnus4') -> EvolutionResult:
    """Total evolution operator over ``[0, T]``.

    In the lab frame pulses are applied between free propagators. In the
    toggling frame each interval evolves under the generator-wise sign-flipped
    Hamiltonian and the accumulated pulse product is applied once at the end,
    which reproduces the lab-frame operator.
    """
    if T <= 0 or substeps < 1:
        raise ValueError('need T > 0 and substeps >= 1')
    if frame not in ('lab', 'toggling'):
        raise ValueError(f'unknown frame {frame!r}')
    if schedule is not None and schedule.m != model.m:
        raise ValueError('schedule and bath model have different qubit counts')
    n, dim = 2**model.m, model.dim
    terms = model.coupling_terms()
    order = [int(lab) for lab in all_labels(2*model.m)]
    paulis = [None]*len(order)
    for lab, a in zip(all_labels(2*model.m), order):
        paulis[a] = pauli_of(lab).matrix
    eye_bath = np.eye(model.d)

    pulses: dict[float, np.ndarray] = {}
    for p in (schedule.pulses if schedule is not None else ()):
        pulses[p.fraction] = p.unitary(model.m) @ pulses.get(p.fraction, np.eye(n))
    cuts = sorted({0.0, 1.0, *pulses})

    U = np.eye(dim, dtype=complex)
    P = np.eye(n, dtype=complex)
    ones = np.ones(len(paulis))
    for a, b in zip(cuts[:-1], cuts[1:]):
        if frame == 'lab':
            U = _interval_propagator(terms, ones, a*T, b*T, substeps, method) @ U
            if b in pulses:
                U = np.kron(pulses[b], eye_bath) @ U
        else:
            signs = _toggling_signs(P, paulis)
            U = _interval_propagator(terms, signs, a*T, b*T, substeps, method) @ U
            if b in pulses:
                P = pulses[b] @ P
    if frame == 'toggling':
        U = np.kron(P, eye_bath) @ U

    drift = np.linalg.norm(U.conj().T @ U - np.eye(dim), 2)
    if drift > 1e-8:
        raise NumericalError(f'unitarity drift {drift:.2e}; increase substeps')
    return EvolutionResult(T, U, decoupling_error(U, model.m, model.d), frame)


def default_t_list(count: int = 7) -> np.ndarray:
    return np.geomspace(3e-3, 3e-1, count)


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    points: list[tuple[float, float]]
    excluded: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'slope': self.slope, 'intercept': self.intercept, 'residual': self.residual,
            'points': [{'T': T, 'epsilon': e} for T, e in self.points],
            'excluded': list(self.excluded),
        }


def scaling_fit(model: BathModel, orders: int | Sequence[int] | None,
                t_list: Sequence[float] | None = None, substeps: int = 64,
                method: str = 'magnus4', floor: float = 1e-12) -> ScalingFit:
    """Least-squares slope of ``log epsilon`` against ``log T``.

    ``orders=None`` disables all pulses. Points at or below ``floor`` are
    dropped with a warning.
    """
    t_list = default_t_list() if t_list is None else np.asarray(t_list, dtype=float)
    if len(t_list) < 4:
        raise ValueError('need at least four values of T')
    if np.log10(max(t_list)/min(t_list)) < 1.5:
        raise ValueError('T values must span at least 1.5 decades')
    if orders is None:
        schedule = None
    else:
        levels = 2*model.m if isinstance(orders, (int, np.integer)) else len(orders)
        schedule = build_schedule(model.m, orders, levels=levels)
    points, excluded = [], []
    for T in t_list:
        eps = evolve(model, schedule, float(T), substeps, method=method).epsilon
        if eps <= floor:
            excluded.append(float(T))
            continue
        if eps >= 0.1:
            log.warning('epsilon %.3g at T=%.3g is outside the small-T regime', eps, T)
        points.append((float(T), float(eps)))
    if excluded:
        warnings.warn(f'dropped {len(excluded)} points at the numerical floor',
                      RuntimeWarning, stacklevel=2)
    if len(points) < 2:
        raise ValueError('fewer than two usable points for the fit')
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(np.sqrt(res[0]/len(x))) if len(res) else 0.0
    return ScalingFit(float(slope), float(intercept), residual, points, excluded)
