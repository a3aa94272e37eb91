"""Thermal fixed points, (quantum) detailed balance and thermal coherence bounds.

Units: hbar = k_B = 1, so ``beta * omega`` is dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DetailedBalanceError, PreconditionError
from .lindblad import check_rates
from .spectrum import Hamiltonian, bohr_modes

DB_TOL = 1e-9
FIXED_POINT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ThermalContext:
    beta: float
    H: Hamiltonian
    pi: np.ndarray

    @property
    def d(self):
        return self.H.d

    def boltzmann(self, x):
        """Unnormalized weight ``exp(-beta (w_x - w_min))``."""
        w = self.H.omegas
        return np.exp(-self.beta * (w[x] - w.min()))


def gibbs(beta, H):
    """Gibbs populations of ``H`` at inverse temperature ``beta``."""
    if not isinstance(H, Hamiltonian):
        H = Hamiltonian(H)
    beta = float(beta)
    if not beta >= 0:
        raise PreconditionError("inverse temperature must be nonnegative")
    w = H.omegas
    weights = np.exp(-beta * (w - w.min()))
    pi = weights / weights.sum()
    pi.setflags(write=False)
    return ThermalContext(beta, H, pi)


def qubit_ground_population(beta, omega):
    return 1.0 / (1.0 + np.exp(-beta * omega))


@dataclass(frozen=True)
class DetailedBalanceReport:
    detailed_balance: bool
    fixed_point: bool
    max_defect: float
    fixed_point_residual: float

    def __bool__(self):
        return self.detailed_balance


def detailed_balance_check(L, ctx, tol=DB_TOL):
    """Pairwise balance ``L[x', x] pi_x = L[x, x'] pi_x'`` plus the weaker ``L pi = 0``."""
    L = check_rates(L)
    pi = ctx.pi
    if L.shape != (len(pi), len(pi)):
        raise PreconditionError("rate matrix and thermal context dimensions differ")
    flux = L * pi[None, :]
    defect = float(np.max(np.abs(flux - flux.T)))
    scale = max(1.0, float(np.max(np.abs(L))))
    resid = float(np.max(np.abs(L @ pi)))
    return DetailedBalanceReport(bool(defect <= tol * scale), bool(resid <= FIXED_POINT_TOL * scale),
                                 defect, resid)


@dataclass(frozen=True)
class QDBReport:
    holds: bool
    max_defect: float
    worst: tuple | None

    def __bool__(self):
        return self.holds


def qdb_check(gen, ctx, tol=DB_TOL):
    """Quantum detailed balance of a covariant generator.

    Compares ``exp(-beta w_y) <x'|L(|x><y|)|y'>`` with ``exp(-beta w_y')
    conj(<x|L(|x'><y'|)|y>)`` over all quadruples of the same mode. Each
    defect is divided by the larger Gibbs weight so that the tolerance
    applies at the scale of the rates.
    """
    S = gen.superop()
    d = gen.d
    w = ctx.H.omegas
    worst = None
    max_defect = 0.0
    for ps in gen.table.pairs:
        for xp, yp in ps:
            for x, y in ps:
                a = np.exp(-ctx.beta * (w[y] - w.min()))
                b = np.exp(-ctx.beta * (w[yp] - w.min()))
                lhs = a * S[xp + yp * d, x + y * d]
                rhs = b * np.conj(S[x + y * d, xp + yp * d])
                defect = abs(lhs - rhs) / max(a, b)
                if defect > max_defect:
                    max_defect = defect
                    worst = (xp, yp, x, y)
    return QDBReport(bool(max_defect <= tol), float(max_defect), worst if max_defect > tol else None)


@dataclass(frozen=True)
class QubitBounds:
    nm_bound: float
    markov_bound: float


def gto_qubit_bounds(p0, c0_abs, beta, omega, pt):
    """Largest final coherence of a qubit under thermal covariant maps.

    ``nm_bound`` ranges over all covariant channels with the Gibbs state as
    fixed point, ``markov_bound`` over thermal Markovian semigroups. A final
    population that the respective class cannot reach gives 0.
    """
    for name, p in (("p0", p0), ("pt", pt)):
        if not 0.0 <= p <= 1.0:
            raise PreconditionError(f"{name}={p} is not a probability")
    if c0_abs < 0 or c0_abs > np.sqrt(p0 * (1 - p0)) + 1e-12:
        raise PreconditionError("initial coherence incompatible with a valid state")
    g = np.exp(beta * omega)
    pi = 1.0 / (1.0 + 1.0 / g)
    q0 = (1.0 - p0) * g
    qt = (1.0 - pt) * g
    if abs(p0 - pi) <= 1e-12:
        same = abs(pt - p0) <= 1e-12
        return QubitBounds(c0_abs if same else 0.0, c0_abs if same else 0.0)
    r = (pt - pi) / (p0 - pi)
    s_max = 1.0 / max(pi, 1.0 - pi)
    eps = 1e-12
    if 1.0 - s_max - eps <= r <= 1.0 + eps:
        nm = np.sqrt(max((pt - q0) * (p0 - qt), 0.0)) / abs(p0 - q0) * c0_abs
    else:
        nm = 0.0
    if -eps <= r <= 1.0 + eps:
        mk = np.sqrt(max((pt - qt) / (p0 - q0), 0.0)) * c0_abs
    else:
        mk = 0.0
    return QubitBounds(float(nm), float(mk))


@dataclass(frozen=True)
class TransportViolation:
    kind: str
    quadruple: tuple
    rate: float
    bound: float


def transport_bounds_check(L, ctx, table=None, tol=1e-9):
    """Check Gibbs-factor limits on the coherence transport rates.

    For every same-mode transfer ``(x, y) -> (x', y')`` the transport rate
    ``sqrt(L[x', x] L[y', y])`` must not exceed ``gamma_x'y' exp(-beta
    w_x'x)``; under detailed balance it equals the reverse rate times the
    same factor. Returns the violations found (empty when all hold).
    """
    L = check_rates(L)
    pi = ctx.pi
    scale = max(1.0, float(np.max(np.abs(L))))
    resid = float(np.max(np.abs(L @ pi)))
    if resid > FIXED_POINT_TOL * scale:
        raise DetailedBalanceError(
            f"the Gibbs state is not a fixed point (|L pi| = {resid:.3e})")
    table = bohr_modes(ctx.H) if table is None else table
    w = ctx.H.omegas
    exit_rate = np.abs(np.diag(L))
    db = detailed_balance_check(L, ctx).detailed_balance
    out = []
    for k in table.nonzero_modes():
        for xp, yp in table.pairs[k]:
            for x, y in table.pairs[k]:
                if (x, y) == (xp, yp):
                    continue
                rate = np.sqrt(L[xp, x] * L[yp, y])
                factor = np.exp(-ctx.beta * (w[xp] - w[x]))
                gamma = 0.5 * (exit_rate[xp] + exit_rate[yp])
                if rate > gamma * factor + tol * scale:
                    out.append(TransportViolation("damping", (xp, yp, x, y),
                                                  float(rate), float(gamma * factor)))
                if db:
                    rev = np.sqrt(L[x, xp] * L[y, yp])
                    if rate > rev * factor + tol * scale:
                        out.append(TransportViolation("reverse", (xp, yp, x, y),
                                                      float(rate), float(rev * factor)))
    return out
