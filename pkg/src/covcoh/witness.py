"""Non-Markovianity witnesses for covariant dynamics.

All "non-Markovian" verdicts assume that the underlying evolution is time
translation covariant. Data that no covariant process can produce get the
separate label ``InconsistentWithCovariance``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .channels import check_stochastic
from .errors import InvalidStateError, PreconditionError
from .linalg import eigvals
from .spectrum import check_density, s_omega

SNAPSHOT_TOL = 1e-12
MONOTONE_TOL = 1e-9
REGION_TOL = 1e-9
REAL_SNAP = 1e-12


class Label(str, enum.Enum):
    CONSISTENT = "ConsistentMarkovianCovariant"
    NON_MARKOVIAN = "NonMarkovianGivenCovariance"
    INCONSISTENT = "InconsistentWithCovariance"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Verdict:
    label: Label
    margin: float = 0.0
    bound_values: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "label", Label(self.label))
        object.__setattr__(self, "margin", float(self.margin))
        if self.label in (Label.NON_MARKOVIAN, Label.INCONSISTENT) and self.margin < 0:
            raise ValueError("violation verdicts carry a nonnegative margin")

    @property
    def flagged(self):
        return self.label in (Label.NON_MARKOVIAN, Label.INCONSISTENT)

    def to_dict(self):
        return {"label": self.label.value, "margin": float(self.margin),
                "bound_values": {k: float(v) for k, v in self.bound_values.items()}}


@dataclass(frozen=True)
class QubitSnapshot:
    """Ground population and coherence magnitude at times 0 and t.

    ``pi`` is the stationary ground population. With ``fix_pi`` the
    covariant bound only considers channels that keep ``pi`` fixed.
    """

    p0: float
    c0_abs: float
    pt: float
    ct_abs: float
    pi: float
    fix_pi: bool = True

    def __post_init__(self):
        for name in ("p0", "pt", "pi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidStateError(f"{name}={v} is not a probability")
        for p, c, tag in ((self.p0, self.c0_abs, "initial"), (self.pt, self.ct_abs, "final")):
            if c < 0 or c > np.sqrt(p * (1.0 - p)) + SNAPSHOT_TOL:
                raise InvalidStateError(
                    f"{tag} coherence {c} exceeds sqrt(p(1-p)) = {np.sqrt(p * (1 - p)):.6g}")


def _free_pi_overlap(p0, pt):
    """max sqrt(P00 P11) over stochastic P with P00 p0 + P01 (1 - p0) = pt."""
    best = -1.0
    # u = P00, v = P01; objective u (1 - v) is convex along the feasible segment
    candidates = []
    if p0 < 1.0:
        for u in (0.0, 1.0):
            candidates.append((u, (pt - u * p0) / (1.0 - p0)))
    if p0 > 0.0:
        for v in (0.0, 1.0):
            candidates.append(((pt - v * (1.0 - p0)) / p0, v))
    for u, v in candidates:
        if -1e-15 <= u <= 1 + 1e-15 and -1e-15 <= v <= 1 + 1e-15:
            best = max(best, np.clip(u, 0, 1) * (1.0 - np.clip(v, 0, 1)))
    return None if best < 0 else np.sqrt(best)


def _population_slack(s):
    # an absolute error SNAPSHOT_TOL in the populations moves r by this much
    return SNAPSHOT_TOL / abs(s.p0 - s.pi)


def _pi_fixed_overlap(r, pi):
    """sqrt(P00 P11) of the pi-preserving map with relaxation ratio r."""
    p00 = r + pi * (1.0 - r)
    p11 = 1.0 - pi * (1.0 - r)
    return np.sqrt(max(p00 * p11, 0.0))


def snapshot_bounds(s, slack=0.0):
    """``(covariant_bound, markov_bound)``; None marks an unreachable population.

    ``slack`` widens the reachable ranges of the ratio r and is added under
    the square roots, so that near-equilibrium data are judged against the
    uncertainty of r rather than its rounded value.
    """
    pi = s.pi
    r = (s.pt - pi) / (s.p0 - pi)
    edge = max(slack, SNAPSHOT_TOL)
    if -edge <= r <= 1.0 + edge:
        markov = np.sqrt(min(max(r, 0.0), 1.0) + slack) * s.c0_abs
    else:
        markov = None
    if s.fix_pi:
        s_max = 1.0 / max(pi, 1.0 - pi)
        if 1.0 - s_max - edge <= r <= 1.0 + edge:
            r = min(max(r, 1.0 - s_max), 1.0)
            cov = np.sqrt(_pi_fixed_overlap(r, pi) ** 2 + 2.0 * slack) * s.c0_abs
        else:
            cov = None
    else:
        ov = _free_pi_overlap(s.p0, s.pt)
        cov = None if ov is None else np.sqrt(ov * ov + 2.0 * slack) * s.c0_abs
    return cov, markov


def qubit_snapshot_witness(s):
    """Verdict from a qubit snapshot ``(p(0), |c(0)|) -> (p(t), |c(t)|)``."""
    if abs(s.p0 - s.pi) <= SNAPSHOT_TOL:
        if s.ct_abs > s.c0_abs + SNAPSHOT_TOL:
            return Verdict(Label.INCONSISTENT, s.ct_abs - s.c0_abs, {"covariant_bound": s.c0_abs})
        return Verdict(Label.INCONCLUSIVE, 0.0)
    cov, markov = snapshot_bounds(s)
    cov_hi, markov_hi = snapshot_bounds(s, _population_slack(s))
    values = {}
    if cov is not None:
        values["covariant_bound"] = cov
    if markov is not None:
        values["markov_bound"] = markov
    if cov_hi is None:
        return Verdict(Label.INCONSISTENT, abs(s.pt - s.p0), values)
    if s.ct_abs > cov_hi + SNAPSHOT_TOL:
        return Verdict(Label.INCONSISTENT, s.ct_abs - (cov if cov is not None else 0.0), values)
    if markov_hi is None:
        # population relaxed past the fixed point
        return Verdict(Label.NON_MARKOVIAN, abs(s.pt - s.pi), values)
    if s.ct_abs > markov_hi + SNAPSHOT_TOL:
        return Verdict(Label.NON_MARKOVIAN, s.ct_abs - (markov if markov is not None else 0.0),
                       values)
    return Verdict(Label.CONSISTENT, max((markov if markov is not None else 0.0) - s.ct_abs, 0.0),
                   values)


def s_omega_monotonicity_witness(traj, table, tol=MONOTONE_TOL):
    """Flag any growth of a mode's l1 coherence along a trajectory of states."""
    states = np.asarray(traj.states)
    for k, rho in enumerate(states):
        try:
            check_density(rho, herm_tol=1e-8, trace_tol=1e-8, psd_tol=1e-8)
        except InvalidStateError as exc:
            raise InvalidStateError(f"state {k} of the trajectory: {exc}") from None
    worst_step = 0.0
    worst_total = 0.0
    for k in table.nonzero_modes():
        w = table.omegas[k]
        series = np.array([s_omega(rho, w, table) for rho in states])
        worst_total = max(worst_total, float(np.max(series - series[0])))
        if len(series) > 1:
            worst_step = max(worst_step, float(np.max(np.diff(series))))
    values = {"max_step_increase": worst_step, "max_increase_over_initial": worst_total}
    if worst_total > tol:
        return Verdict(Label.INCONSISTENT, worst_total, values)
    if worst_step > tol:
        return Verdict(Label.NON_MARKOVIAN, worst_step, values)
    return Verdict(Label.CONSISTENT, 0.0, values)


def embeddability_region(d, phi):
    """Largest modulus of an eigenvalue with argument ``phi`` of an embeddable d x d matrix."""
    if d < 2:
        raise PreconditionError("dimension must be at least 2")
    phi = float(phi)
    if abs(phi) > np.pi + 1e-12:
        raise PreconditionError("argument must lie in [-pi, pi]")
    if d == 2:
        return 1.0 if phi == 0.0 else 0.0
    return float(np.exp(-abs(phi) * np.tan(np.pi / d)))


def _polar(lam):
    r = abs(lam)
    if abs(lam.imag) <= REAL_SNAP * max(1.0, r):
        phi = 0.0 if lam.real >= 0 else np.pi
    else:
        phi = float(np.angle(lam))
    return r, phi


def spectral_witness(P, tol=REGION_TOL):
    """Flag eigenvalues of a transition matrix outside the embeddable region."""
    P = check_stochastic(P)
    d = P.shape[0]
    lam = eigvals(P)
    worst = -np.inf
    worst_lam = None
    for z in lam:
        r, phi = _polar(z)
        if r <= tol:
            continue
        excess = r - embeddability_region(d, phi)
        if excess > worst:
            worst, worst_lam = excess, z
    values = {}
    if worst_lam is not None:
        values = {"modulus": abs(worst_lam), "argument": _polar(worst_lam)[1],
                  "region_radius": embeddability_region(d, _polar(worst_lam)[1])}
    if worst > tol:
        return Verdict(Label.NON_MARKOVIAN, float(worst), values)
    return Verdict(Label.CONSISTENT, 0.0, values)


def embeddability_curve(d, n=361):
    phi = np.linspace(-np.pi, np.pi, n)
    return phi, np.array([embeddability_region(d, p) for p in phi])


def karpelevic_sample(d, n, seed=None):
    """Eigenvalues of ``n`` random column-stochastic matrices (uniform columns)."""
    if n < 1:
        raise PreconditionError("need at least one sample")
    rng = np.random.default_rng(seed)
    out = np.empty((n, d), dtype=complex)
    for k in range(n):
        P = rng.dirichlet(np.ones(d), size=d).T
        out[k] = eigvals(P)
    return out.ravel()


def rigid_translation(d, q):
    """``(1 - q) I + q C`` with C the cyclic shift ``x -> x + 1``."""
    return (1.0 - q) * np.eye(d) + q * np.roll(np.eye(d), 1, axis=0)
