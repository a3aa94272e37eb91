import numpy as np
import pytest

from covcoh.lindblad import rates_from_offdiagonal
from covcoh.sampling import random_rates
from covcoh.transfer import (QUTRIT_CEILING, TransferProblem, _propagate_qutrit, coherence_mixing,
                             four_level_transfer, qutrit_transfer_curve,
                             qutrit_transfer_optimize, relaxed_transfer_curve)


def family(a):
    return rates_from_offdiagonal(np.array([[0, 0, 0], [2 * a, 0, 0], [0, a, 0]], dtype=float))


def test_zero_rates_transfer_nothing():
    traj = qutrit_transfer_curve(np.zeros((3, 3)), 1.0, np.linspace(0, 5, 11))
    assert not np.any(traj.states[:, 1])


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_family_peak(a):
    target = 2 * np.sqrt(2) / (3 * np.sqrt(3))
    t_star, peak = TransferProblem.from_rates(family(a)).peak(1.0)
    assert np.isclose(t_star, np.log(3) / a, rtol=1e-12)
    assert abs(peak - target) < 1e-12
    grid = np.linspace(1e-3, 10 / a, 20001)
    dense = qutrit_transfer_curve(family(a), 1.0, grid).states[:, 1]
    assert abs(dense.max() - target) < 1e-6
    assert abs(grid[np.argmax(dense)] - np.log(3) / a) < 2e-3 / a


def test_closed_form_agrees_with_exponential(rng):
    times = np.linspace(0, 4, 21)
    for _ in range(30):
        L = random_rates(rng, 3)
        prob = TransferProblem.from_rates(L)
        if prob.disc <= 1e-8:
            continue
        exact = qutrit_transfer_curve(L, 0.7, times).states[:, 1]
        via_expm = _propagate_qutrit(L, 0.7, times)[:, 1]
        assert np.allclose(exact, via_expm, atol=1e-10)


def test_transfer_under_ceiling_and_relaxed_curve(rng):
    times = np.linspace(0, 8, 81)
    for _ in range(100):
        L = random_rates(rng, 3, density=rng.uniform(0.3, 1.0))
        c2 = qutrit_transfer_curve(L, 1.0, times).states[:, 1]
        assert np.max(c2) <= QUTRIT_CEILING + 1e-9
        if np.any(L[[1, 2], [0, 1]] > 0):
            assert np.all(c2 <= relaxed_transfer_curve(L, 1.0, times) + 1e-12)


@pytest.mark.slow
def test_optimizer_bracket():
    opt = qutrit_transfer_optimize(grid_density=10)
    assert 0.5443 - 1e-3 <= opt.best_value <= 0.70711


def test_four_level_transfer():
    times = np.array([0.0, 2.0, 10.0, 60.0])
    traj = four_level_transfer(1.0, 0.3, times).states
    assert traj[0, 1] == 0
    assert abs(traj[2, 1] - (1 - np.exp(-10)) * 0.3) < 1e-9
    assert abs(traj[3, 1] - 0.3) < 1e-12


def test_mixing_limits():
    times = np.linspace(0, 20, 201)
    traj = coherence_mixing(1.0, (0.25, 0.0), times).states
    assert np.allclose(traj[0], [0.25, 0.0])
    assert np.allclose(traj[-1], [0.125, 0.125], atol=1e-12)
    assert np.max(np.abs(traj.sum(axis=1) - 0.25)) < 1e-10
