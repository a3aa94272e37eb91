"""Random draws of states, rate matrices, channels and generators.

Every function takes a ``numpy.random.Generator`` so that callers control
seeding.
"""

from __future__ import annotations

import numpy as np

from .spectrum import Hamiltonian, bohr_modes


def random_hamiltonian(rng, d, nondegenerate_bohr=False, max_tries=100):
    """Random levels; optionally rejection-sampled for distinct Bohr frequencies."""
    for _ in range(max_tries):
        w = np.sort(rng.uniform(0.0, 1.0, d))
        w -= w[0]
        try:
            H = Hamiltonian(w)
        except ValueError:
            continue
        if not nondegenerate_bohr:
            return H
        table = bohr_modes(H)
        gaps = np.diff(table.omegas)
        if table.nondegenerate and np.min(gaps) > 1e-3:
            return H
    raise RuntimeError("could not draw a suitable Hamiltonian")


def random_density(rng, d, rank=None):
    """Density matrix from a Ginibre draw of the given rank (default full)."""
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, d):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def common_phase_density(rng, d):
    """Mixed state whose off-diagonal entries are real and nonnegative."""
    rho = random_density(rng, d)
    mag = np.abs(rho)
    # the entrywise modulus of a PSD matrix need not be PSD; shrink if needed
    off = mag - np.diag(np.diag(mag))
    pops = np.real(np.diag(rho))
    lmin = np.linalg.eigvalsh(np.diag(pops) + off)[0]
    if lmin < 0:
        shrink = np.min(pops) / (np.min(pops) - lmin)
        off = off * shrink * rng.uniform(0.5, 1.0)
    return np.diag(pops) + off


def random_rates(rng, d, density=1.0, scale=1.0):
    """Population generator with exponential off-diagonal rates."""
    L = rng.exponential(scale, size=(d, d))
    if density < 1.0:
        L *= rng.uniform(size=(d, d)) < density
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=0))
    return L


def detailed_balance_rates(rng, pi, scale=1.0):
    """Rates with ``L[x', x] pi[x] = L[x, x'] pi[x']`` by construction."""
    d = len(pi)
    S = rng.exponential(scale, size=(d, d))
    S = 0.5 * (S + S.T)
    L = S * np.sqrt(np.outer(pi, 1.0 / pi))
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=0))
    return L


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    G = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    return G @ G.conj().T


def random_correlation(rng, n):
    """PSD matrix with unit diagonal."""
    B = random_psd(rng, n, rank=rng.integers(1, n + 1))
    s = np.sqrt(np.real(np.diag(B)))
    return B / np.outer(s, s)


def random_covariant_blocks(rng, table, scale=1.0):
    """Unnormalized PSD blocks for each Bohr frequency."""
    return [scale * random_psd(rng, len(ps), rank=rng.integers(1, len(ps) + 1)) / len(ps)
            for ps in table.pairs]


def random_channel_blocks(rng, table):
    """Blocks of a random covariant CPTP map.

    PSD blocks are congruence-scaled by ``1/sqrt(s_x s_y)`` where ``s_x`` is
    the total outflow from level ``x``; this keeps every block PSD and
    makes the population matrix column-stochastic.
    """
    blocks = random_covariant_blocks(rng, table)
    d = table.d
    s = np.zeros(d)
    for ps, B in zip(table.pairs, blocks):
        for i, (xp, x) in enumerate(ps):
            s[x] += B[i, i].real
    out = []
    for ps, B in zip(table.pairs, blocks):
        col = np.array([1.0 / np.sqrt(s[x]) for _, x in ps])
        out.append(B * np.outer(col, col))
    return out


def random_stochastic(rng, d, alpha=1.0):
    return rng.dirichlet(np.full(d, alpha), size=d).T


def channel_blocks_with_population(rng, P, table):
    """Random valid covariant blocks whose diagonals equal ``P``."""
    out = []
    for ps in table.pairs:
        r = np.sqrt(np.array([P[xp, x] for xp, x in ps]))
        out.append(np.outer(r, r) * random_correlation(rng, len(ps)))
    return out
