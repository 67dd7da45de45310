import numpy as np
import pytest
from scipy.linalg import expm

import nudd.sim as sim
from nudd.algebra import GeneratorLabel, pauli_of
from nudd.sequence import build_schedule
from nudd.sim import (NumericalError, decoupling_error, evolve, random_bath, scaling_fit)


def test_random_bath_deterministic():
    a = random_bath(1, 3, degree=2, seed=5)
    b = random_bath(1, 3, degree=2, seed=5)
    assert a.coeffs.tobytes() == b.coeffs.tobytes()
    assert random_bath(1, 3, degree=2, seed=6).coeffs.tobytes() != a.coeffs.tobytes()


def test_random_bath_hermitian_and_bounded():
    model = random_bath(2, 2, degree=2, seed=1, bound=0.7)
    for alpha in range(16):
        B = model.bath_operator(alpha, 0.37)
        assert np.abs(B - B.conj().T).max() <= 1e-14
        for p in range(3):
            assert np.linalg.norm(model.coeffs[alpha, p], 2) <= 0.7 + 1e-12
    H = model.hamiltonian(0.2)
    assert np.abs(H - H.conj().T).max() <= 1e-13


def test_random_bath_generators_and_errors():
    model = random_bath(1, 2, degree=0, generators=[0, 1])
    assert np.any(model.coeffs[1]) and not np.any(model.coeffs[2]) and not np.any(model.coeffs[3])
    with pytest.raises(ValueError):
        random_bath(1, 0)
    with pytest.raises(ValueError):
        random_bath(1, 2, degree=-1)


def test_zero_hamiltonian_gives_pulse_product():
    model = random_bath(1, 2, bound=0.0)
    sched = build_schedule(1, 3)
    res = evolve(model, sched, 0.4)
    assert np.allclose(res.U, np.kron(sched.total_unitary(), np.eye(2)), atol=1e-14)
    assert res.epsilon <= 1e-12


def test_no_pulses_closed_form():
    model = random_bath(1, 2, degree=0, seed=3)
    T = 0.8
    res = evolve(model, None, T, substeps=4)
    assert np.abs(res.U - expm(-1j*T*model.hamiltonian(0.0))).max() <= 1e-12


def test_no_pulses_time_dependent_reference():
    # a fine midpoint product cross-checks the fourth-order default
    model = random_bath(1, 2, degree=2, seed=4)
    a = evolve(model, None, 0.5, substeps=64).U
    b = evolve(model, None, 0.5, substeps=2048, method='midpoint').U
    assert np.abs(a - b).max() <= 1e-6


@pytest.mark.parametrize('orders', [2, (1, 2), 1])
def test_lab_and_toggling_frames_agree(orders):
    model = random_bath(1, 2, degree=2, seed=2)
    sched = build_schedule(1, orders)
    lab = evolve(model, sched, 0.2, frame='lab')
    tog = evolve(model, sched, 0.2, frame='toggling')
    assert np.abs(lab.U - tog.U).max() <= 1e-9
    assert lab.epsilon == pytest.approx(tog.epsilon, abs=1e-9)


def test_decoupling_error_examples():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3)) + 1j*rng.normal(size=(3, 3))
    V = expm(-1j*(A + A.conj().T))
    assert decoupling_error(np.kron(np.eye(2), V), 1, 3) <= 1e-12
    X = pauli_of(GeneratorLabel.from_string('10')).matrix
    with pytest.warns(RuntimeWarning):
        eps = decoupling_error(np.kron(X, V), 1, 3)
    assert eps >= 1


def test_epsilon_decreases_with_N():
    model = random_bath(1, 2, degree=2, seed=1)
    eps = [evolve(model, build_schedule(1, N), 0.05).epsilon for N in (1, 2, 3)]
    assert eps[0] > eps[1] > eps[2]


def test_unitarity_and_convergence():
    model = random_bath(1, 2, degree=2, seed=1)
    sched = build_schedule(1, 2)
    for T in (0.01, 0.3):
        a = evolve(model, sched, T, substeps=64)
        b = evolve(model, sched, T, substeps=128)
        assert np.linalg.norm(a.U.conj().T @ a.U - np.eye(4), 2) <= 1e-9
        assert abs(a.epsilon - b.epsilon) <= 1e-8


def test_drift_raises(monkeypatch):
    real = sim._exp_hermitian
    monkeypatch.setattr(sim, '_exp_hermitian', lambda H, h: 1.001*real(H, h))
    with pytest.raises(NumericalError):
        evolve(random_bath(1, 2), None, 0.1)


def test_evolve_errors():
    model = random_bath(1, 2)
    with pytest.raises(ValueError):
        evolve(model, None, 0.0)
    with pytest.raises(ValueError):
        evolve(model, None, 0.1, frame='rotating')
    with pytest.raises(ValueError):
        evolve(model, build_schedule(2, 1), 0.1)
    with pytest.raises(ValueError):
        evolve(model, None, 0.1, method='euler')


def test_hahn_echo():
    # dephasing-only constant bath, one level, N=1: first order cancels
    slopes = []
    for seed in (1, 2, 3):
        model = random_bath(1, 2, degree=0, seed=seed, generators=[0, 1])
        slopes.append(scaling_fit(model, (1,)).slope)
    assert min(slopes) >= 2 - 0.3


def test_no_pulse_slope():
    fit = scaling_fit(random_bath(1, 2, degree=2, seed=1), None)
    assert fit.slope == pytest.approx(1, abs=0.3)
    assert len(fit.points) == 7 and fit.residual < 0.1


def test_scaling_fit_input_checks():
    model = random_bath(1, 2)
    with pytest.raises(ValueError):
        scaling_fit(model, 1, [0.01, 0.02, 0.05])
    with pytest.raises(ValueError):
        scaling_fit(model, 1, [0.01, 0.02, 0.05, 0.1])


def test_scaling_fit_floor():
    silent = random_bath(1, 2, bound=0.0)
    with pytest.warns(RuntimeWarning), pytest.raises(ValueError):
        scaling_fit(silent, 1)
