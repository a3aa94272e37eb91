"""Coherence transfer and mixing inside a single mode.

Three scenarios:

* equidistant qutrit, coherence moved from ``rho_10`` to ``rho_21`` (the two
  entries share level 1, so transfer competes with damping);
* four levels ``(0, W, W + D, 2W + D)``, coherence moved from ``rho_10`` to
  ``rho_32`` (disjoint entries, transfer can be perfect);
* the same four levels with symmetric rates, which mixes the two entries
  while conserving their total magnitude.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .lindblad import (bound_trajectory, check_rates, evolve_mode, mode_propagator,
                       optimal_generator, rates_from_offdiagonal)
from .linalg import Trajectory, expm
from .errors import DimensionError, PreconditionError
from .spectrum import bohr_modes, equidistant, four_level

CRITICAL_TOL = 1e-12
QUTRIT_CEILING = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class TransferProblem:
    """Damped-oscillator data of the qutrit transfer: ``c2'' + eta c2' + nu2 c2 = 0``."""

    L: np.ndarray
    eta: float
    nu2: float
    disc: float

    @classmethod
    def from_rates(cls, L):
        L = check_rates(L)
        if L.shape != (3, 3):
            raise DimensionError("qutrit transfer needs a 3-level rate matrix")
        g10 = 0.5 * (abs(L[1, 1]) + abs(L[0, 0]))
        g21 = 0.5 * (abs(L[2, 2]) + abs(L[1, 1]))
        eta = g10 + g21
        nu2 = g10 * g21 - np.sqrt(L[0, 1] * L[1, 2] * L[1, 0] * L[2, 1])
        return cls(L, eta, nu2, eta * eta - 4.0 * nu2)

    def c2_closed_form(self, c1_0, t):
        L = self.L
        sd = np.sqrt(self.disc)
        return (2.0 * c1_0 * np.sqrt(L[1, 0] * L[2, 1] / self.disc)
                * np.exp(-0.5 * self.eta * t) * np.sinh(0.5 * sd * t))

    def peak(self, c1_0=1.0):
        """``(t*, max c2)``; ``t* = inf`` when c2 only saturates."""
        L = self.L
        gain = L[1, 0] * L[2, 1]
        if gain <= 0.0:
            return 0.0, 0.0
        if self.nu2 <= 1e-15 * self.eta ** 2:
            # undamped limit: monotone rise to c1 sqrt(L10 L21) / eta
            return np.inf, c1_0 * np.sqrt(gain) / self.eta
        if self.disc <= CRITICAL_TOL:
            t = 2.0 / self.eta
            return t, float(_propagate_qutrit(self.L, c1_0, np.array([t]))[0, 1])
        sd = np.sqrt(self.disc)
        t = 2.0 / sd * np.arctanh(sd / self.eta)
        return t, float(self.c2_closed_form(c1_0, t))


def _qutrit_table():
    return bohr_modes(equidistant(3))


def _propagate_qutrit(L, c1_0, times):
    Q = mode_propagator(L, 1.0, _qutrit_table()).Q
    return np.array([expm(Q * t) @ np.array([c1_0, 0.0]) for t in times])


def qutrit_transfer_curve(L, c1_0, times):
    """Optimal ``(c1(t), c2(t))`` for transfer ``rho_10 -> rho_21`` starting from ``c2 = 0``.

    ``c2`` uses the closed hyperbolic-sine form away from critical damping
    and the matrix exponential otherwise; ``c1`` always comes from the
    exponential.
    """
    prob = TransferProblem.from_rates(L)
    times = np.asarray(times, dtype=float)
    states = _propagate_qutrit(prob.L, c1_0, times)
    if prob.disc > CRITICAL_TOL:
        states[:, 1] = prob.c2_closed_form(c1_0, times)
    return Trajectory(times, states)


def relaxed_transfer_curve(L, c1_0, times):
    """Upper curve obtained by dropping the restoring term ``nu2``."""
    prob = TransferProblem.from_rates(L)
    L = prob.L
    t = np.asarray(times, dtype=float)
    return c1_0 * np.sqrt(L[1, 0] * L[2, 1]) / prob.eta * (1.0 - np.exp(-prob.eta * t))


# weights (L10, L20, 2 L01, 2 L21, L02, L12) / 2 sum to eta
_WEIGHT_SCALE = np.array([2.0, 2.0, 1.0, 1.0, 2.0, 2.0])
_OFFDIAG = [(1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2)]


def rates_from_weights(wts):
    """Qutrit rate matrix with damping sum ``eta = sum(wts)``."""
    R = np.zeros((3, 3))
    for (i, j), s, v in zip(_OFFDIAG, _WEIGHT_SCALE, wts):
        R[i, j] = s * v
    return rates_from_offdiagonal(R)


def _peak_value(wts):
    prob = TransferProblem.from_rates(rates_from_weights(wts))
    return prob.peak(1.0)[1]


def _simplex_grid(n, k):
    for cut in itertools.combinations(range(n + k - 1), k - 1):
        parts = np.diff((-1,) + cut + (n + k - 1,)) - 1
        yield parts / n


@dataclass(frozen=True)
class TransferOptimum:
    best_L: np.ndarray
    best_value: float
    best_time: float
    ceiling: float = QUTRIT_CEILING


def qutrit_transfer_optimize(grid_density=12, refine=True):
    """Maximize the optimal transfer ``max_t c2(t) / c1(0)`` over qutrit rates.

    Rates are normalized to ``eta = 1``, so the search runs over a
    6-simplex: an exhaustive lattice scan followed by Nelder-Mead from the
    best lattice points. The result is a numeric lower estimate of the true
    maximum; ``ceiling`` is the proven upper bound.
    """
    if grid_density < 8:
        raise PreconditionError("grid_density must be at least 8")
    scored = sorted(((_peak_value(w), tuple(w)) for w in _simplex_grid(grid_density, 6)),
                    reverse=True)
    best_val, best_w = scored[0][0], np.array(scored[0][1])
    if refine:
        def neg(z):
            w = np.exp(z - z.max())
            return -_peak_value(w / w.sum())

        for _, start in scored[:5]:
            z0 = np.log(np.asarray(start) + 1e-3)
            res = minimize(neg, z0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 8000})
            if -res.fun > best_val:
                w = np.exp(res.x - res.x.max())
                best_val, best_w = -res.fun, w / w.sum()
    L = rates_from_weights(best_w)
    t_best = TransferProblem.from_rates(L).peak(1.0)[0]
    return TransferOptimum(L, float(best_val), float(t_best))


def four_level_rates(lam):
    if not lam > 0:
        raise PreconditionError("rate must be positive")
    R = np.zeros((4, 4))
    R[2, 0] = R[3, 1] = lam
    return rates_from_offdiagonal(R)


def mixing_rates(lam):
    if not lam > 0:
        raise PreconditionError("rate must be positive")
    R = np.zeros((4, 4))
    R[2, 0] = R[0, 2] = R[3, 1] = R[1, 3] = lam
    return rates_from_offdiagonal(R)


def _aligned_state(d):
    # all entry phases equal to one
    return np.eye(d) / d


def _four_level_run(L, c10, c32, times, delta):
    table = bohr_modes(four_level(1.0, delta))
    gen = optimal_generator(L, _aligned_state(4), table, omega=1.0)
    traj = evolve_mode(gen, 1.0, [c10, c32], times)
    return Trajectory(traj.times, np.abs(traj.states)), L, table


def four_level_transfer(lam, c1_0, times, delta=0.37):
    """``(|rho_10|, |rho_32|)`` under the optimal generator that moves ``rho_10`` to ``rho_32``."""
    traj, _, _ = _four_level_run(four_level_rates(lam), c1_0, 0.0, times, delta)
    return traj


def coherence_mixing(lam, magnitudes, times, delta=0.37):
    """``(|rho_10|, |rho_32|)`` under symmetric exchange at rate ``lam``."""
    c10, c32 = magnitudes
    traj, _, _ = _four_level_run(mixing_rates(lam), c10, c32, times, delta)
    return traj


def mixing_bound(lam, magnitudes, times, delta=0.37):
    table = bohr_modes(four_level(1.0, delta))
    rho = np.zeros((4, 4))
    rho[1, 0], rho[3, 2] = magnitudes
    return bound_trajectory(mixing_rates(lam), rho, 1.0, table, times)
