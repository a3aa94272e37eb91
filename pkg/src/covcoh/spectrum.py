"""Hamiltonians, Bohr spectra, mode tables and mode decomposition of states.

Density matrices are plain ``(d, d)`` complex numpy arrays; the helpers
here validate them and expose magnitude/phase views.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegeneracyError, DimensionError, InvalidStateError,
                     PreconditionError, UnknownModeError)
from .linalg import HERMITIAN_TOL, PSD_TOL, min_eigenvalue_hermitian

FREQ_TOL = 1e-9
TRACE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Diagonal Hamiltonian given by its level frequencies (hbar = 1)."""

    omegas: np.ndarray
    tol: float = FREQ_TOL

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float).ravel()
        if w.size < 2:
            raise DimensionError("a Hamiltonian needs at least two levels")
        if not np.all(np.isfinite(w)):
            raise PreconditionError("level frequencies must be finite")
        scale = np.max(np.abs(w))
        gaps = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(gaps, np.inf)
        if scale == 0 or np.min(gaps) <= self.tol * scale:
            i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
            raise DegeneracyError(
                f"levels {i} and {j} coincide within relative tolerance {self.tol:g}")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    @property
    def d(self):
        return self.omegas.size

    def bohr(self, x, y):
        return self.omegas[x] - self.omegas[y]

    def matrix(self):
        return np.diag(self.omegas).astype(complex)

    def to_dict(self):
        return {"omegas": self.omegas.tolist()}

    @classmethod
    def from_dict(cls, obj):
        if "omegas" not in obj:
            raise PreconditionError("Hamiltonian JSON needs an 'omegas' field")
        return cls(np.asarray(obj["omegas"], dtype=float))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def equidistant(d, omega=1.0):
    return Hamiltonian(omega * np.arange(d, dtype=float))


def four_level(omega=1.0, delta=0.37):
    """Levels (0, W, W + D, 2W + D): two disjoint copies of the gap W."""
    return Hamiltonian(np.array([0.0, omega, omega + delta, 2 * omega + delta]))


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Partition of matrix entries (x, y) by Bohr frequency.

    ``omegas`` are the mode frequencies in ascending order, ``pairs[k]`` the
    lexicographically sorted index pairs of mode ``k`` and ``labels[x, y]``
    the mode index of entry ``(x, y)``.
    """

    H: Hamiltonian
    omegas: np.ndarray
    pairs: tuple
    labels: np.ndarray
    tol: float = FREQ_TOL
    _scale: float = field(default=1.0, repr=False)

    @property
    def d(self):
        return self.H.d

    @property
    def n_modes(self):
        return len(self.omegas)

    @property
    def zero(self):
        return self.index(0.0)

    def index(self, omega):
        """Position of the mode with frequency ``omega`` (within tolerance)."""
        dist = np.abs(self.omegas - float(omega))
        k = int(np.argmin(dist))
        if dist[k] > self.tol * self._scale:
            raise UnknownModeError(f"no mode at frequency {omega!r}")
        return k

    def mode_pairs(self, omega):
        return self.pairs[self.index(omega)]

    def mode_of(self, x, y):
        return self.omegas[self.labels[x, y]]

    def nonzero_modes(self):
        z = self.zero
        return [k for k in range(self.n_modes) if k != z]

    @property
    def nondegenerate(self):
        """True when every nonzero mode holds a single entry."""
        return all(len(self.pairs[k]) == 1 for k in self.nonzero_modes())

    def column_index(self, k):
        """Column-stacked positions ``x + y*d`` of the pairs of mode ``k``."""
        d = self.d
        return np.array([x + y * d for x, y in self.pairs[k]], dtype=int)

    def __repr__(self):
        body = ", ".join(f"{w:.6g}: {list(p)}" for w, p in zip(self.omegas, self.pairs))
        return f"ModeTable({{{body}}})"


def bohr_modes(H, tol=FREQ_TOL):
    """Group all ordered pairs (x, y) by the Bohr frequency w_x - w_y."""
    if not isinstance(H, Hamiltonian):
        H = Hamiltonian(np.asarray(H, dtype=float), tol=tol)
    w = H.omegas
    d = w.size
    scale = float(np.max(np.abs(w - w.min())))
    diffs = w[:, None] - w[None, :]
    pos = sorted((diffs[x, y], x, y) for x in range(d) for y in range(d)
                 if diffs[x, y] > 0)
    if any(abs(diffs[x, y]) <= tol * scale for x in range(d) for y in range(d) if x != y):
        raise DegeneracyError("degenerate levels: a nonzero pair has zero Bohr frequency")
    clusters = []
    for val, x, y in pos:
        if clusters and val - clusters[-1][-1][0] <= tol * scale:
            clusters[-1].append((val, x, y))
        else:
            clusters.append([(val, x, y)])
    freqs = [float(np.mean([c[0] for c in cl])) for cl in clusters]
    groups = [sorted((x, y) for _, x, y in cl) for cl in clusters]
    omegas = [-f for f in reversed(freqs)] + [0.0] + freqs
    pairs = ([sorted((y, x) for x, y in g) for g in reversed(groups)]
             + [[(x, x) for x in range(d)]] + groups)
    labels = np.empty((d, d), dtype=int)
    for k, ps in enumerate(pairs):
        for x, y in ps:
            labels[x, y] = k
    labels.setflags(write=False)
    omegas = np.array(omegas)
    omegas.setflags(write=False)
    return ModeTable(H, omegas, tuple(tuple(p) for p in pairs), labels, tol, scale)


@dataclass(frozen=True)
class ModeVector:
    omega: float
    pairs: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != len(self.pairs):
            raise DimensionError(
                f"{amps.size} amplitudes for a mode with {len(self.pairs)} pairs")
        object.__setattr__(self, "amplitudes", amps)

    def to_matrix(self, d):
        out = np.zeros((d, d), dtype=complex)
        for (x, y), a in zip(self.pairs, self.amplitudes):
            out[x, y] = a
        return out


def _check_dim(rho, table):
    rho = np.asarray(rho)
    if rho.shape != (table.d, table.d):
        raise DimensionError(f"state of shape {rho.shape} for a {table.d}-level table")
    return rho


def decompose(rho, table):
    """Split ``rho`` into its modes of coherence, in table order."""
    rho = _check_dim(rho, table)
    return [ModeVector(w, ps, [rho[x, y] for x, y in ps])
            for w, ps in zip(table.omegas, table.pairs)]


def recompose(modes, d):
    return sum((m.to_matrix(d) for m in modes), np.zeros((d, d), dtype=complex))


def mode_amplitudes(rho, table, omega):
    rho = _check_dim(rho, table)
    return np.array([rho[x, y] for x, y in table.mode_pairs(omega)], dtype=complex)


def s_omega(rho, omega, table):
    """l1 coherence carried by mode ``omega``."""
    return float(np.sum(np.abs(mode_amplitudes(rho, table, omega))))


def check_density(rho, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, psd_tol=PSD_TOL):
    """Return ``rho`` as a complex array or raise InvalidStateError."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix has non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise InvalidStateError(f"not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1) > trace_tol:
        raise InvalidStateError(f"trace {tr:.12g} differs from 1")
    lmin = min_eigenvalue_hermitian(rho)
    if lmin < -psd_tol:
        raise InvalidStateError(f"negative eigenvalue {lmin:.3e}")
    return rho


def is_density(rho, **tols):
    try:
        check_density(rho, **tols)
    except (InvalidStateError, DimensionError):
        return False
    return True


def magnitudes(rho):
    return np.abs(np.asarray(rho))


def phases(rho):
    """Unit phase factors of the entries; zero entries get phase 1."""
    rho = np.asarray(rho, dtype=complex)
    mag = np.abs(rho)
    out = np.ones_like(rho)
    nz = mag > 0
    out[nz] = rho[nz] / mag[nz]
    return out


def populations(rho):
    return np.real(np.diag(np.asarray(rho)))


def density_to_dict(rho):
    rho = np.asarray(rho, dtype=complex)
    return {"d": rho.shape[0], "re": rho.real.tolist(), "im": rho.imag.tolist()}


def density_from_dict(obj, validate=True):
    try:
        d = int(obj["d"])
        rho = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    except KeyError as exc:
        raise PreconditionError(f"density JSON is missing field {exc}") from None
    if rho.shape != (d, d):
        raise DimensionError(f"density JSON declares d={d} but holds {rho.shape}")
    return check_density(rho) if validate else rho
