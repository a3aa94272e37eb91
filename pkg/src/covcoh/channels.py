"""Covariant CPTP maps in block (Choi) parametrization.

A covariant channel is stored as one Hermitian coefficient matrix per Bohr
frequency. Block ``w`` is indexed by the transition pairs ``(x', x)`` with
``w_x' - w_x = w`` (the same pair list the mode table holds for ``w``) and
entry ``[(x', x), (y', y)]`` is the coefficient of ``|x'><y'|`` in the image
of ``|x><y|``. The diagonals of the blocks together form the population
transfer matrix ``P[x', x]``.

Superoperators use column stacking: ``vec(rho)[x + y*d] = rho[x, y]``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionError, InvalidChannelError, PhaseMatchingError,
                     PreconditionError)
from .linalg import HERMITIAN_TOL, PSD_TOL, min_eigenvalue_hermitian
from .spectrum import Hamiltonian, ModeTable, bohr_modes, check_density, phases

STOCHASTIC_TOL = 1e-10
NEG_CLIP = 1e-12
BLOCK_HERM_TOL = 1e-12


def check_stochastic(P, tol=STOCHASTIC_TOL):
    """Return ``P`` with tiny negatives clipped, or raise if not column-stochastic."""
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionError(f"population matrix must be square, got {P.shape}")
    if np.min(P) < -NEG_CLIP:
        raise PreconditionError(f"negative transition probability {np.min(P):.3e}")
    P[P < 0] = 0.0
    dev = np.max(np.abs(P.sum(axis=0) - 1.0))
    if dev > tol:
        raise PreconditionError(f"columns do not sum to one (deviation {dev:.3e})")
    return P


def block_superop(blocks, table):
    """Column-stacked d^2 x d^2 matrix from per-frequency coefficient blocks."""
    d = table.d
    S = np.zeros((d * d, d * d), dtype=complex)
    for ps, B in zip(table.pairs, blocks):
        for i, (xp, x) in enumerate(ps):
            for j, (yp, y) in enumerate(ps):
                S[xp + yp * d, x + y * d] = B[i, j]
    return S


def blocks_from_superop(S, table):
    d = table.d
    S = np.asarray(S)
    if S.shape != (d * d, d * d):
        raise DimensionError(f"superoperator of shape {S.shape} for d={d}")
    blocks = []
    for ps in table.pairs:
        B = np.empty((len(ps), len(ps)), dtype=complex)
        for i, (xp, x) in enumerate(ps):
            for j, (yp, y) in enumerate(ps):
                B[i, j] = S[xp + yp * d, x + y * d]
        blocks.append(B)
    return blocks


def block_diagonals(blocks, table):
    """Matrix ``M[x', x]`` collected from the block diagonals."""
    d = table.d
    M = np.zeros((d, d), dtype=complex)
    for ps, B in zip(table.pairs, blocks):
        for i, (xp, x) in enumerate(ps):
            M[xp, x] = B[i, i]
    return M


def blocks_choi(blocks, table, scale):
    d = table.d
    J = np.zeros((d * d, d * d), dtype=complex)
    for ps, B in zip(table.pairs, blocks):
        for i, (xp, x) in enumerate(ps):
            for j, (yp, y) in enumerate(ps):
                J[xp * d + x, yp * d + y] = scale * B[i, j]
    return J


def _normalize_blocks(blocks, table):
    if len(blocks) != table.n_modes:
        raise DimensionError(f"{len(blocks)} blocks for {table.n_modes} modes")
    out = []
    for ps, B in zip(table.pairs, blocks):
        B = np.array(B, dtype=complex)
        if B.shape != (len(ps), len(ps)):
            raise DimensionError(f"block of shape {B.shape} for a mode with {len(ps)} pairs")
        if not np.all(np.isfinite(B)):
            raise PreconditionError("non-finite block coefficient")
        B.setflags(write=False)
        out.append(B)
    return tuple(out)


@dataclass(frozen=True)
class BlockReport:
    """Outcome of a structural check; truthy iff no problem was found."""

    valid: bool
    problems: tuple = ()
    min_eigenvalues: dict = field(default_factory=dict)

    def __bool__(self):
        return self.valid


def check_blocks(blocks, table, psd_tol=PSD_TOL, herm_tol=BLOCK_HERM_TOL):
    """Hermiticity, per-block PSD and the pairwise magnitude condition."""
    problems = []
    mins = {}
    for w, ps, B in zip(table.omegas, table.pairs, blocks):
        herm = np.max(np.abs(B - B.conj().T))
        if herm > herm_tol:
            problems.append(f"block {w:.6g} not Hermitian (deviation {herm:.3e})")
        lmin = min_eigenvalue_hermitian(B)
        mins[float(w)] = lmin
        if lmin < -psd_tol:
            problems.append(f"block {w:.6g} has negative eigenvalue {lmin:.3e}")
        diag = np.clip(np.real(np.diag(B)), 0, None)
        excess = np.abs(B) - np.sqrt(np.outer(diag, diag)) - psd_tol
        if np.any(excess > 0):
            i, j = np.unravel_index(np.argmax(excess), excess.shape)
            problems.append(
                f"block {w:.6g}: |coefficient {ps[i]},{ps[j]}| exceeds the geometric "
                f"mean of its diagonal entries by {excess[i, j] + psd_tol:.3e}")
    return problems, mins


@dataclass(frozen=True, eq=False)
class CovariantChannel:
    """Time-translation covariant channel given by its coefficient blocks."""

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

    def superop(self):
        if "S" not in self._cache:
            S = block_superop(self.blocks, self.table)
            S.setflags(write=False)
            self._cache["S"] = S
        return self._cache["S"]

    def population(self):
        """Population transfer matrix ``P[x', x]``."""
        return np.real(block_diagonals(self.blocks, self.table))

    def coefficient(self, xp, x, yp, y):
        d = self.d
        return self.superop()[xp + yp * d, x + y * d]

    def is_valid(self):
        if "valid" not in self._cache:
            self._cache["valid"] = bool(validate(self))
        return self._cache["valid"]

    @classmethod
    def identity(cls, table):
        return cls(table, [_identity_block(ps) for ps in table.pairs])

    def to_dict(self):
        return {
            "omegas": self.table.H.omegas.tolist(),
            "blocks": [{"omega": float(w), "pairs": [list(p) for p in ps],
                        "re": B.real.tolist(), "im": B.imag.tolist()}
                       for w, ps, B in zip(self.table.omegas, self.table.pairs, self.blocks)],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj, key="blocks"):
        return cls(*_blocks_from_dict(obj, key))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _identity_block(ps):
    # identity channel: coefficient 1 between (x, x) and (y, y) entries
    return np.array([[1.0 if xp == x and yp == y else 0.0 for yp, y in ps]
                     for xp, x in ps])


def _blocks_from_dict(obj, key):
    try:
        H = Hamiltonian(np.asarray(obj["omegas"], dtype=float))
        entries = obj[key]
    except KeyError as exc:
        raise PreconditionError(f"missing field {exc}") from None
    table = bohr_modes(H)
    blocks = [None] * table.n_modes
    for n, ent in enumerate(entries):
        try:
            k = table.index(ent["omega"])
            B = np.asarray(ent["re"], dtype=float) + 1j * np.asarray(ent["im"], dtype=float)
            pairs = [tuple(p) for p in ent["pairs"]]
        except KeyError as exc:
            raise PreconditionError(f"{key}[{n}] is missing field {exc}") from None
        if pairs != list(table.pairs[k]):
            raise PreconditionError(
                f"{key}[{n}].pairs {pairs} differ from mode order {list(table.pairs[k])}")
        blocks[k] = B
    for k, B in enumerate(blocks):
        if B is None:
            n = len(table.pairs[k])
            blocks[k] = np.zeros((n, n))
    return table, blocks


def choi(ch):
    """Choi matrix ``(E x id)(|phi+><phi+|)`` with ``|x'x>`` at index ``x'*d + x``."""
    return blocks_choi(ch.blocks, ch.table, 1.0 / ch.d)


def validate(ch, psd_tol=PSD_TOL, stochastic_tol=STOCHASTIC_TOL):
    """Check complete positivity (per block) and trace preservation."""
    problems, mins = check_blocks(ch.blocks, ch.table, psd_tol)
    P = ch.population()
    if np.min(P) < -NEG_CLIP:
        problems.append(f"negative transition probability {np.min(P):.3e}")
    dev = np.max(np.abs(P.sum(axis=0) - 1.0))
    if dev > stochastic_tol:
        problems.append(f"population matrix not stochastic (column sums off by {dev:.3e})")
    return BlockReport(not problems, tuple(problems), mins)


def _require_valid(ch):
    if not ch.is_valid():
        raise InvalidChannelError("; ".join(validate(ch).problems))


def apply(ch, rho):
    """Image of ``rho`` under the channel."""
    _require_valid(ch)
    rho = check_density(rho)
    if rho.shape[0] != ch.d:
        raise DimensionError(f"{rho.shape[0]}-level state for a {ch.d}-level channel")
    return apply_unchecked(ch.superop(), rho)


def apply_unchecked(S, rho):
    d = rho.shape[0]
    return (S @ rho.reshape(-1, order="F")).reshape((d, d), order="F")


def mode_map(ch, omega):
    """Matrix acting on the amplitude vector of the state mode ``omega``."""
    idx = ch.table.column_index(ch.table.index(omega))
    return ch.superop()[np.ix_(idx, idx)]


def is_covariant(superop, H, tol=1e-10):
    """True iff the map only couples entries with equal Bohr frequency."""
    table = H if isinstance(H, ModeTable) else bohr_modes(H)
    d = table.d
    S = np.asarray(superop)
    if S.shape != (d * d, d * d):
        raise DimensionError(f"superoperator of shape {S.shape} for d={d}")
    lab = table.labels.reshape(-1, order="F")
    mask = lab[:, None] != lab[None, :]
    return bool(np.max(np.abs(S[mask]), initial=0.0) <= tol)


def bound_nm(P, rho0, xp, yp, table):
    """Largest |sigma_x'y'| reachable by any covariant channel with populations ``P``."""
    P = check_stochastic(P)
    rho0 = np.asarray(rho0)
    total = 0.0
    for x, y in table.pairs[table.labels[xp, yp]]:
        total += np.sqrt(P[xp, x] * P[yp, y]) * abs(rho0[x, y])
    return float(total)


def bound_nm_mode(P, rho0, omega, table):
    return np.array([bound_nm(P, rho0, xp, yp, table) for xp, yp in table.mode_pairs(omega)])


def rank_one_blocks(amplitude, table):
    """Blocks ``B[(x',x),(y',y)] = a[x',x] * conj(a[y',y])``."""
    out = []
    for ps in table.pairs:
        v = np.array([amplitude[xp, x] for xp, x in ps], dtype=complex)
        out.append(np.outer(v, v.conj()))
    return out


def _partner_phases(theta, table, omega):
    """Kraus phases that align every source entry of one mode (omega > 0)."""
    d = table.d
    partner = {x: y for x, y in table.mode_pairs(omega)}
    phi = np.ones((d, d), dtype=complex)
    done = np.zeros((d, d), dtype=bool)

    def get(xp, x):
        if done[xp, x]:
            return phi[xp, x]
        if xp in partner and x in partner:
            val = np.conj(theta[x, partner[x]]) * get(partner[xp], partner[x])
        else:
            val = 1.0
        phi[xp, x] = val
        done[xp, x] = True
        return val

    for xp in range(d):
        for x in range(d):
            get(xp, x)
    return phi


def nonmarkovian_phases(rho, tol=0.0):
    """Level phases ``f`` with ``theta_xy = f_x conj(f_y)`` on nonzero entries, or None."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    theta = phases(rho)
    support = np.abs(rho) > tol
    f = np.full(d, np.nan + 0j)
    for root in range(d):
        if not np.isnan(f[root]):
            continue
        f[root] = 1.0
        queue = deque([root])
        while queue:
            y = queue.popleft()
            for x in range(d):
                if x != y and support[x, y] and np.isnan(f[x]):
                    f[x] = theta[x, y] * f[y]
                    queue.append(x)
    resid = np.abs(theta - np.outer(f, f.conj()))
    resid[~support] = 0.0
    if np.max(resid) > 1e-9:
        return None
    return f


def saturating_channel(P, rho0, table, omega=None):
    """Covariant channel with populations ``P`` that attains ``bound_nm`` on ``rho0``.

    With ``omega`` given, the Kraus phases are fitted to that mode (and its
    mirror -omega), which is always possible. With ``omega=None`` every mode
    is saturated at once; this needs a non-degenerate Bohr spectrum or
    level phases ``f`` with ``theta_xy = f_x conj(f_y)`` on the support of
    ``rho0``, and PhaseMatchingError is raised otherwise.
    """
    P = check_stochastic(P)
    rho0 = np.asarray(rho0, dtype=complex)
    d = table.d
    if P.shape != (d, d) or rho0.shape != (d, d):
        raise DimensionError("population matrix, state and table dimensions differ")
    theta = phases(rho0)
    if omega is not None:
        k = table.index(omega)
        w = table.omegas[k]
        if k == table.zero:
            phi = np.ones((d, d), dtype=complex)
        else:
            phi = _partner_phases(theta, table, abs(w))
    elif table.nondegenerate:
        phi = np.ones((d, d), dtype=complex)
    else:
        f = nonmarkovian_phases(rho0)
        if f is None:
            raise PhaseMatchingError(
                "state phases admit no level-phase factorization; only per-mode "
                "saturation is available (pass omega)")
        phi = np.broadcast_to(f.conj()[None, :], (d, d)).copy()
    amp = phi * np.sqrt(P)
    return CovariantChannel(table, rank_one_blocks(amp, table))


def channel_from_superop(S, H):
    table = H if isinstance(H, ModeTable) else bohr_modes(H)
    if not is_covariant(S, table):
        raise PreconditionError("superoperator couples different modes")
    return CovariantChannel(table, blocks_from_superop(S, table))
