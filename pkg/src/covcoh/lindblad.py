"""Covariant Lindbladians, their evolution and the optimal coherence bound.

A covariant generator is ``L(rho) = A(rho) - {A^dag(1), rho}/2`` with ``A``
a covariant CP map. ``A`` is stored in the same per-frequency block form as
:class:`covcoh.channels.CovariantChannel`; its block diagonals are the jump
rates ``A[x', x]``. Evolution is done in the interaction picture (the
Hamiltonian rotation is removed) unless ``lab_frame=True``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channels import (BlockReport, _blocks_from_dict, _normalize_blocks,
                       block_diagonals, block_superop, blocks_choi, check_blocks,
                       rank_one_blocks)
from .errors import (ConsistencyError, DimensionError, InvalidStateError,
                     NonErgodicError, PhaseMatchingError, PreconditionError)
from .linalg import PSD_TOL, Trajectory, eigvals, integrate_linear
from .spectrum import ModeTable, bohr_modes, check_density, phases

RATE_NEG_TOL = 1e-12
RATE_SUM_TOL = 1e-10
PHASE_TOL = 1e-9
NULL_TOL = 1e-10
SUPPORT_TOL = 1e-12
STATE_TOL = 1e-8


def check_rates(L, sum_tol=RATE_SUM_TOL):
    """Validate a population generator and return it as a float array."""
    L = np.array(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"rate matrix must be square, got {L.shape}")
    if not np.all(np.isfinite(L)):
        raise PreconditionError("rate matrix has non-finite entries")
    off = L - np.diag(np.diag(L))
    if np.min(off) < -RATE_NEG_TOL:
        raise PreconditionError(f"negative transition rate {np.min(off):.3e}")
    if np.max(np.diag(L)) > RATE_NEG_TOL:
        raise PreconditionError("positive diagonal rate")
    dev = np.max(np.abs(L.sum(axis=0)))
    if dev > sum_tol * max(1.0, np.max(np.abs(L))):
        raise PreconditionError(f"columns do not sum to zero (deviation {dev:.3e})")
    off = np.clip(off, 0.0, None)
    return off - np.diag(off.sum(axis=0))


def rates_from_offdiagonal(R):
    """Population generator with the given off-diagonal rates."""
    R = np.array(R, dtype=float)
    np.fill_diagonal(R, 0.0)
    return R - np.diag(R.sum(axis=0))


@dataclass(frozen=True, eq=False)
class CovariantGenerator:
    """Covariant Lindbladian given by the blocks of its CP part."""

    table: ModeTable
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", _normalize_blocks(self.blocks, self.table))
        object.__setattr__(self, "_cache", {})

    @property
    def d(self):
        return self.table.d

    def block(self, omega):
        return self.blocks[self.table.index(omega)]

    def jump_rates(self):
        """``A[x', x]``, including the pure-dephasing diagonal ``A[x, x]``."""
        return np.real(block_diagonals(self.blocks, self.table))

    def superop_cp(self):
        return block_superop(self.blocks, self.table)

    def superop(self):
        """Column-stacked matrix of the full dissipator."""
        if "S" not in self._cache:
            d = self.d
            S = self.superop_cp()
            a = self.jump_rates().sum(axis=0)
            S -= np.diag(0.5 * (a[:, None] + a[None, :]).reshape(-1, order="F"))
            S.setflags(write=False)
            self._cache["S"] = S
        return self._cache["S"]

    def mode_generator(self, omega):
        """Generator restricted to the amplitudes of state mode ``omega``."""
        idx = self.table.column_index(self.table.index(omega))
        return self.superop()[np.ix_(idx, idx)]

    def is_valid(self):
        if "valid" not in self._cache:
            self._cache["valid"] = bool(validate_generator(self))
        return self._cache["valid"]

    @classmethod
    def zero(cls, table):
        return cls(table, [np.zeros((len(ps), len(ps))) for ps in table.pairs])

    def to_dict(self):
        return {
            "omegas": self.table.H.omegas.tolist(),
            "Ablocks": [{"omega": float(w), "pairs": [list(p) for p in ps],
                         "re": B.real.tolist(), "im": B.imag.tolist()}
                        for w, ps, B in zip(self.table.omegas, self.table.pairs, self.blocks)],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        return cls(*_blocks_from_dict(obj, "Ablocks"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def validate_generator(gen, psd_tol=PSD_TOL):
    problems, mins = check_blocks(gen.blocks, gen.table, psd_tol)
    R = gen.jump_rates()
    off = R - np.diag(np.diag(R))
    if np.min(off) < -RATE_NEG_TOL:
        problems.append(f"negative jump rate {np.min(off):.3e}")
    return BlockReport(not problems, tuple(problems), mins)


def generator_choi(gen):
    return blocks_choi(gen.blocks, gen.table, 1.0)


def _require_valid(gen):
    if not gen.is_valid():
        raise PreconditionError("invalid generator: " + "; ".join(validate_generator(gen).problems))


def generator_from_rates(L, table, dephasing=None):
    """Generator whose CP part only has the jump rates ``L`` (plus pure dephasing).

    All coherent couplings between transitions are zero, so every
    coherence decays at ``gamma_xy + (dephasing_x + dephasing_y)/2``.
    """
    L = check_rates(L)
    d = table.d
    if L.shape != (d, d):
        raise DimensionError("rate matrix and table dimensions differ")
    R = L - np.diag(np.diag(L))
    if dephasing is not None:
        dephasing = np.asarray(dephasing, dtype=float)
        if dephasing.shape != (d,) or np.min(dephasing) < 0:
            raise PreconditionError("dephasing rates must be d nonnegative numbers")
        R = R + np.diag(dephasing)
    blocks = [np.diag([R[xp, x] for xp, x in ps]).astype(complex) for ps in table.pairs]
    return CovariantGenerator(table, blocks)


def lindbladian_action(gen, rho):
    """``d rho / dt`` in the interaction picture."""
    rho = np.asarray(rho, dtype=complex)
    d = gen.d
    if rho.shape != (d, d):
        raise DimensionError(f"state of shape {rho.shape} for a {d}-level generator")
    return (gen.superop() @ rho.reshape(-1, order="F")).reshape((d, d), order="F")


def population_generator(gen):
    """Classical rate matrix induced on the populations."""
    R = gen.jump_rates()
    R = R - np.diag(np.diag(R))
    return R - np.diag(R.sum(axis=0))


def verify_covariance(gen, H, tol=1e-10):
    """True iff the generator commutes with ``[H, .]`` on all matrix units."""
    if isinstance(gen, CovariantGenerator):
        S = gen.superop()
        table = gen.table if H is None else (H if isinstance(H, ModeTable) else bohr_modes(H))
    else:
        S = np.asarray(gen)
        table = H if isinstance(H, ModeTable) else bohr_modes(H)
    d = table.d
    if S.shape != (d * d, d * d):
        raise DimensionError(f"superoperator of shape {S.shape} for d={d}")
    Hm = np.diag(table.H.omegas)
    ident = np.eye(d)
    comm = np.kron(ident, Hm) - np.kron(Hm.T, ident)
    return bool(np.max(np.abs(S @ comm - comm @ S)) <= tol)


def evolve_mode(gen, omega, amplitudes, times):
    """Propagate the amplitude vector of one mode exactly."""
    return integrate_linear(gen.mode_generator(omega), np.asarray(amplitudes, dtype=complex), times)


def evolve(gen, rho0, times, lab_frame=False, check=True):
    """Trajectory of density matrices under the generator.

    Each mode is propagated on its own by the exponential of the
    mode-restricted generator. In the lab frame entry ``(x, y)`` also
    picks up ``exp(-i w_xy t)``.
    """
    _require_valid(gen)
    rho0 = check_density(rho0)
    table = gen.table
    d = table.d
    if rho0.shape != (d, d):
        raise DimensionError(f"state of shape {rho0.shape} for a {d}-level generator")
    times = np.asarray(times, dtype=float)
    states = np.zeros((len(times), d, d), dtype=complex)
    for k, ps in enumerate(table.pairs):
        xs = [p[0] for p in ps]
        ys = [p[1] for p in ps]
        amps = rho0[xs, ys]
        if not np.any(amps):
            continue
        traj = integrate_linear(gen.mode_generator(table.omegas[k]), amps, times)
        states[:, xs, ys] = traj.states
    if lab_frame:
        w = table.H.omegas
        bohr = w[:, None] - w[None, :]
        states = states * np.exp(-1j * bohr[None] * times[:, None, None])
    if check:
        for t, s in zip(times, states):
            try:
                check_density(s, herm_tol=STATE_TOL, trace_tol=STATE_TOL, psd_tol=STATE_TOL)
            except InvalidStateError as exc:
                raise ConsistencyError(f"evolved state invalid at t={t:g}: {exc}") from None
    return Trajectory(times, states)


@dataclass(frozen=True, eq=False)
class ModePropagator:
    """Linear system ``dc/dt = Q c`` for the optimal coherence magnitudes of one mode."""

    omega: float
    pairs: tuple
    Q: np.ndarray

    @property
    def damping(self):
        return -np.diag(self.Q)

    def transport(self):
        T = self.Q.copy()
        np.fill_diagonal(T, 0.0)
        return T


def mode_propagator(L, omega, table):
    L = check_rates(L)
    pairs = table.mode_pairs(omega)
    exit_rate = np.abs(np.diag(L))
    R = np.clip(L - np.diag(np.diag(L)), 0.0, None)
    n = len(pairs)
    Q = np.zeros((n, n))
    for i, (xp, yp) in enumerate(pairs):
        for j, (x, y) in enumerate(pairs):
            if i == j:
                Q[i, i] = -0.5 * (exit_rate[xp] + exit_rate[yp])
            else:
                Q[i, j] = np.sqrt(R[xp, x] * R[yp, y])
    return ModePropagator(float(table.omegas[table.index(omega)]), pairs, Q)


def bound_trajectory(L, rho0, omega, table, times):
    """Upper envelope ``expm(Q t) |rho(0)|`` on the entries of mode ``omega``."""
    prop = mode_propagator(L, omega, table)
    rho0 = np.asarray(rho0)
    mags = np.array([abs(rho0[x, y]) for x, y in prop.pairs])
    traj = integrate_linear(prop.Q, mags, times)
    return Trajectory(traj.times, np.clip(traj.states, 0.0, None))


def phase_matching_violation(rho0, omega, table, tol=PHASE_TOL):
    """First same-mode quadruple that breaks phase matching, or None.

    The condition is ``theta[x', y'] conj(theta[x, y]) = theta[x', x]
    conj(theta[y', y])`` for all pairs (x', y'), (x, y) of the mode, where
    ``theta`` are the entry phases (1 for vanishing entries).
    """
    theta = phases(rho0)
    modes = range(table.n_modes) if omega is None else [table.index(omega)]
    for k in modes:
        ps = table.pairs[k]
        for xp, yp in ps:
            for x, y in ps:
                lhs = theta[xp, yp] * np.conj(theta[x, y])
                rhs = theta[xp, x] * np.conj(theta[yp, y])
                if abs(lhs - rhs) > tol:
                    return (xp, yp, x, y)
    return None


def phase_matching(rho0, omega, table, tol=PHASE_TOL):
    return phase_matching_violation(rho0, omega, table, tol) is None


def optimal_generator(L, rho0, table, omega=None):
    """Generator with population dynamics ``L`` that saturates the coherence bound.

    The CP part has Kraus-like amplitudes ``theta[x', x] sqrt(L[x', x])``
    per transition and no pure dephasing. Phase matching is checked for
    ``omega`` (all modes when None) and its failure raises
    PhaseMatchingError.
    """
    L = check_rates(L)
    d = table.d
    rho0 = np.asarray(rho0, dtype=complex)
    if L.shape != (d, d) or rho0.shape != (d, d):
        raise DimensionError("rate matrix, state and table dimensions differ")
    bad = phase_matching_violation(rho0, omega, table)
    if bad is not None:
        raise PhaseMatchingError(
            "initial phases are not matched on entries (x', y', x, y) = "
            f"{bad}; the bound cannot be attained by this construction", bad)
    amp = phases(rho0) * np.sqrt(np.clip(L, 0.0, None))
    np.fill_diagonal(amp, 0.0)
    return CovariantGenerator(table, rank_one_blocks(amp, table))


def null_space_size(L, tol=NULL_TOL):
    lam = eigvals(L)
    scale = max(1.0, np.linalg.norm(L, np.inf))
    return int(np.sum(np.abs(lam) <= tol * scale)), lam


def stationary_distribution(L):
    """Least-squares solution of ``L pi = 0`` with unit sum."""
    L = check_rates(L)
    d = L.shape[0]
    M = np.vstack([L, np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return pi


def is_ergodic(L):
    """Unique zero eigenvalue and a stationary distribution of full support."""
    L = check_rates(L)
    nulls, _ = null_space_size(L)
    if nulls != 1:
        return False
    return bool(np.min(stationary_distribution(L)) > SUPPORT_TOL)


def require_unique_null(L):
    nulls, lam = null_space_size(L)
    if nulls != 1:
        raise NonErgodicError(
            f"rate matrix has {nulls} zero eigenvalues; {nulls - 1} extra "
            "stationary direction(s) prevent a unique relaxation spectrum")
    return lam
