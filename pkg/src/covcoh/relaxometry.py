"""Relaxation (T1) and decoherence (T2) times of covariant generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DetailedBalanceError, PreconditionError
from .lindblad import check_rates, population_generator, require_unique_null
from .thermo import detailed_balance_check, gibbs

BOUND_SLACK = 1e-9


def harmonic_mean(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise PreconditionError("harmonic mean of an empty set")
    if np.any(v <= 0):
        raise PreconditionError("times must be positive")
    return v.size / np.sum(1.0 / v)


def decoherence_rates(gen):
    """Complex rates ``alpha[x, y]`` with ``d rho_xy/dt = -alpha_xy rho_xy``.

    Only meaningful when the entry is alone in its mode.
    """
    S = gen.superop()
    d = gen.d
    alpha = {}
    for x in range(d):
        for y in range(x):
            alpha[(x, y)] = -S[x + y * d, x + y * d]
    return alpha


def t2_times(gen, table=None):
    """Decoherence time ``1/Re(alpha_xy)`` for every pair x > y."""
    table = gen.table if table is None else table
    if not table.nondegenerate:
        raise DegeneracyError(
            "decoherence times need a non-degenerate Bohr spectrum; "
            "coherences of a shared mode do not decay independently")
    out = {}
    for pair, a in decoherence_rates(gen).items():
        if a.real <= 0:
            out[pair] = np.inf
        else:
            out[pair] = 1.0 / a.real
    return out


def t1_times(L):
    """Relaxation times ``1/|Re lambda|`` over the nonzero eigenvalues, longest first."""
    L = check_rates(L)
    lam = require_unique_null(L)
    scale = max(1.0, np.linalg.norm(L, np.inf))
    nonzero = lam[np.argsort(np.abs(lam))][1:]
    re = np.abs(nonzero.real)
    if np.any(re <= 1e-14 * scale):
        raise PreconditionError("nonzero eigenvalue without decay")
    return np.sort(1.0 / re)[::-1]


def relaxation_frequencies(L):
    """Imaginary parts of the nonzero eigenvalues (reported, never averaged)."""
    lam = require_unique_null(check_rates(L))
    return lam[np.argsort(np.abs(lam))][1:].imag


@dataclass(frozen=True)
class RelaxationProfile:
    t1: np.ndarray
    t2: dict
    hmean_t1: float
    hmean_t2: float

    def to_dict(self):
        return {
            "t1": [float(v) for v in self.t1],
            "t2": [{"pair": list(k), "t2": float(v)} for k, v in sorted(self.t2.items())],
            "hmean_t1": float(self.hmean_t1),
            "hmean_t2": float(self.hmean_t2),
        }


def relaxation_profile(gen, table=None):
    t1 = t1_times(population_generator(gen))
    t2 = t2_times(gen, table)
    return RelaxationProfile(t1, t2, harmonic_mean(t1), harmonic_mean(list(t2.values())))


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool


def harmonic_bound_check(gen, table=None):
    """Compare the harmonic mean of T2 with ``d/(d-1)`` times that of T1."""
    prof = relaxation_profile(gen, table)
    d = gen.d
    lhs = prof.hmean_t2
    rhs = d / (d - 1) * prof.hmean_t1
    return BoundCheck(float(lhs), float(rhs), bool(lhs <= rhs + BOUND_SLACK))


def thermal_t1_hmean(L, beta, H, tol=1e-9):
    """Harmonic-mean T1 of a detailed-balanced rate matrix from its upward-closed form."""
    L = check_rates(L)
    ctx = gibbs(beta, H)
    rep = detailed_balance_check(L, ctx, tol)
    if not rep.detailed_balance:
        raise DetailedBalanceError(
            f"rates violate detailed balance (max defect {rep.max_defect:.3e})")
    w = H.omegas
    d = L.shape[0]
    total = 0.0
    for x in range(d):
        for xp in range(x):
            total += L[xp, x] * (1.0 + np.exp(-beta * (w[x] - w[xp])))
    return (d - 1) / total
