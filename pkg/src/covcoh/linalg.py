"""Dense linear-algebra and ODE kernel.

Everything here works on small dense numpy arrays (d <= 16 for density
matrices, d**2 for superoperators). Autonomous linear systems are always
propagated with the matrix exponential; the Runge-Kutta integrator exists
as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DimensionError, NumericalError, PreconditionError, StiffnessError

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States sampled on a strictly increasing time grid.

    ``states[k]`` is the state (vector or matrix) at ``times[k]``.
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states)
        if times.ndim != 1:
            raise DimensionError("times must be one-dimensional")
        if len(states) != len(times):
            raise DimensionError(
                f"{len(states)} states for {len(times)} time points")
        if np.any(np.diff(times) <= 0):
            raise PreconditionError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return len(self.times)


def _as_square(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise PreconditionError(f"{name} has non-finite entries")
    return M


# Pade coefficients and thresholds from Higham, SIAM J. Matrix Anal. Appl.
# 26 (2005) 1179, Table 2.3.
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0,
        1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0,
          13: 5.371920351148152e0}


def _pade_uv(A, m):
    n = A.shape[0]
    ident = np.eye(n, dtype=A.dtype)
    b = _PADE[m]
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        u = A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        u = u + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident
        U = A @ u
        V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        V = V + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
        return U, V
    powers = [ident, A2]
    for _ in range(2, (m + 1) // 2):
        powers.append(powers[-1] @ A2)
    u = sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
    V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
    return A @ u, V


def expm(M):
    """Matrix exponential by scaling and squaring with a Pade approximant.

    Uses the degree-3..13 diagonal approximants selected by the 1-norm;
    matrices past the degree-13 threshold are scaled by ``2**-s`` first.
    """
    M = _as_square(M)
    A = M.astype(np.complex128 if np.iscomplexobj(M) else np.float64)
    n = A.shape[0]
    if n == 0:
        return A.copy()
    norm = np.linalg.norm(A, 1)
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm / _THETA[13])))) if norm > 0 else 0
    U, V = _pade_uv(A / 2.0 ** s, 13)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def _hessenberg(A):
    H = np.array(A, dtype=np.complex128)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _givens(a, b):
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return 1.0, 0.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b), r
    c = abs(a) / r
    s = (a / abs(a)) * np.conj(b) / r
    return c, s, r


def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c + 0j)
    mu1 = 0.5 * (a + d) + disc
    mu2 = 0.5 * (a + d) - disc
    return mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2


def _qr_step(H, mu):
    """One shifted QR sweep ``H - mu = QR -> RQ + mu`` on a Hessenberg block."""
    m = H.shape[0]
    R = H - mu * np.eye(m)
    rots = []
    for k in range(m - 1):
        c, s, _ = _givens(R[k, k], R[k + 1, k])
        rk = R[k, k:].copy()
        rk1 = R[k + 1, k:].copy()
        R[k, k:] = c * rk + s * rk1
        R[k + 1, k:] = -np.conj(s) * rk + c * rk1
        rots.append((c, s))
    for k, (c, s) in enumerate(rots):
        top = min(k + 2, m)
        ck = R[:top, k].copy()
        ck1 = R[:top, k + 1].copy()
        R[:top, k] = c * ck + np.conj(s) * ck1
        R[:top, k + 1] = -s * ck + c * ck1
    R += mu * np.eye(m)
    return R


def eigvals(M, max_iter_per_dim=500):
    """Eigenvalues with multiplicity via Hessenberg reduction and shifted QR.

    Single-shift complex QR with Wilkinson shifts, deflating from the bottom
    of the active window. An exceptional shift is used after ten sweeps
    without deflation, which breaks the cycling seen on permutation-like
    matrices.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return M.astype(complex).ravel()
    H = _hessenberg(M)
    scale = np.linalg.norm(H, np.inf)
    eps = np.finfo(float).eps
    out = np.zeros(n, dtype=complex)
    hi = n - 1
    total = 0
    since_deflation = 0
    cap = max_iter_per_dim * n
    while hi >= 0:
        if hi == 0:
            out[0] = H[0, 0]
            break
        lo = hi
        while lo > 0:
            sub = abs(H[lo, lo - 1])
            diag = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if sub <= eps * (diag if diag > 0 else scale):
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out[hi] = H[hi, hi]
            hi -= 1
            since_deflation = 0
            continue
        if total >= cap:
            resid = abs(H[hi, hi - 1])
            raise NumericalError(
                f"QR iteration did not converge after {total} sweeps "
                f"(trailing subdiagonal residual {resid:.3e})")
        since_deflation += 1
        total += 1
        if since_deflation % 10 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * np.exp(1j * 0.37 * since_deflation)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi],
                            H[hi, hi - 1], H[hi, hi])
        H[lo:hi + 1, lo:hi + 1] = _qr_step(H[lo:hi + 1, lo:hi + 1], mu)
    return out


def is_hermitian(H, tol=HERMITIAN_TOL):
    H = np.asarray(H)
    return H.ndim == 2 and H.shape[0] == H.shape[1] and \
        bool(np.max(np.abs(H - H.conj().T), initial=0.0) <= tol)


def min_eigenvalue_hermitian(H):
    H = np.asarray(H)
    if H.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0])


def psd_check(H, tol=PSD_TOL, herm_tol=HERMITIAN_TOL):
    """True iff the Hermitian matrix ``H`` has smallest eigenvalue >= -tol."""
    H = _as_square(H)
    if not is_hermitian(H, herm_tol):
        raise PreconditionError(
            "psd_check needs a Hermitian matrix (deviation "
            f"{np.max(np.abs(H - H.conj().T)):.3e} > {herm_tol:g})")
    return min_eigenvalue_hermitian(H) >= -tol


def _check_grid(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise DimensionError("time grid must be a non-empty 1-d array")
    if times[0] < 0:
        raise PreconditionError("time grid must start at t >= 0")
    if np.any(np.diff(times) <= 0):
        raise PreconditionError("time grid must be strictly increasing")
    return times


def integrate_linear(G, y0, times):
    """Exact propagation ``y(t) = expm(G t) y0`` on a time grid.

    ``y0`` is the state at t = 0. Consecutive grid points are linked by
    ``expm(G dt)``; exponentials are reused for repeated step sizes.
    """
    G = _as_square(G, "generator")
    y0 = np.asarray(y0)
    if y0.ndim != 1 or y0.shape[0] != G.shape[0]:
        raise DimensionError(
            f"initial vector of shape {y0.shape} for generator {G.shape}")
    times = _check_grid(times)
    dtype = np.result_type(G, y0, float)
    out = np.empty((len(times), len(y0)), dtype=dtype)
    cache = {}

    def step(dt):
        prop = cache.get(dt)
        if prop is None:
            prop = expm(G * dt)
            cache[dt] = prop
        return prop

    y = y0.astype(dtype)
    if times[0] > 0:
        y = step(times[0]) @ y
    out[0] = y
    for k in range(1, len(times)):
        y = step(times[k] - times[k - 1]) @ y
        out[k] = y
    return Trajectory(times, out)


def integrate_rk(f: Callable, y0, times, tol=1e-10):
    """Adaptive embedded Runge-Kutta (Dormand-Prince 8(5,3)) solution.

    ``f(t, y)`` is the vector field; the local error per step is held below
    ``tol`` (used as both relative and absolute tolerance).
    """
    y0 = np.asarray(y0)
    if y0.ndim != 1:
        raise DimensionError("initial state must be a vector")
    times = _check_grid(times)
    t_start = 0.0 if times[0] > 0 else times[0]
    if times[-1] == t_start:
        return Trajectory(times, y0[None, :].copy())
    sol = solve_ivp(f, (t_start, times[-1]), y0, method="DOP853",
                    t_eval=times, rtol=tol, atol=tol)
    if sol.status != 0:
        raise StiffnessError(f"Runge-Kutta integration failed: {sol.message}")
    return Trajectory(times, sol.y.T.copy())
