import numpy as np
import pytest

from covcoh.errors import InvalidStateError, PreconditionError
from covcoh.linalg import Trajectory, expm
from covcoh.lindblad import CovariantGenerator, evolve
from covcoh.sampling import random_covariant_blocks, random_density, random_hamiltonian, random_rates
from covcoh.spectrum import bohr_modes
from covcoh.witness import (Label, QubitSnapshot, embeddability_curve, embeddability_region,
                            karpelevic_sample, qubit_snapshot_witness, rigid_translation,
                            s_omega_monotonicity_witness, spectral_witness)

P0, C0 = 1 / 6, np.sqrt(5) / 6


def test_no_evolution_is_consistent():
    v = qubit_snapshot_witness(QubitSnapshot(P0, C0, P0, C0, 0.5))
    assert v.label is Label.CONSISTENT


def test_excess_coherence_is_non_markovian():
    # |c| = 0.23 exceeds the Markov bound 0.2041 but not the covariant one
    v = qubit_snapshot_witness(QubitSnapshot(P0, C0, 0.4, 0.23, 0.5))
    assert v.label is Label.NON_MARKOVIAN
    assert np.isclose(v.bound_values["markov_bound"], np.sqrt(0.1 / (1 / 3)) * C0)
    assert np.isclose(v.margin, 0.23 - v.bound_values["markov_bound"])


def test_impossible_snapshot_state_rejected():
    # |c| = 0.55 is larger than sqrt(p (1 - p)) at p = 0.4
    with pytest.raises(InvalidStateError):
        QubitSnapshot(P0, C0, 0.4, 0.55, 0.5)


def test_population_overshoot_is_non_markovian():
    v = qubit_snapshot_witness(QubitSnapshot(P0, C0, 0.6, 0.05, 0.5))
    assert v.label is Label.NON_MARKOVIAN


def test_beyond_covariant_bound_is_inconsistent():
    v = qubit_snapshot_witness(QubitSnapshot(P0, C0, 0.4, 0.48, 0.5))
    assert v.label is Label.INCONSISTENT and v.margin > 0


def test_equilibrium_start_is_inconclusive():
    v = qubit_snapshot_witness(QubitSnapshot(0.5, 0.3, 0.5, 0.2, 0.5))
    assert v.label is Label.INCONCLUSIVE


def test_evolution_is_monotone(rng):
    for _ in range(20):
        d = int(rng.integers(2, 5))
        table = bohr_modes(random_hamiltonian(rng, d))
        gen = CovariantGenerator(table, random_covariant_blocks(rng, table))
        traj = evolve(gen, random_density(rng, d), np.linspace(0, 3, 30))
        assert s_omega_monotonicity_witness(traj, table).label is Label.CONSISTENT


def test_constant_and_revival_trajectories(qubit_table):
    rho = np.array([[0.5, 0.4], [0.4, 0.5]], dtype=complex)
    const = Trajectory(np.arange(4.0), np.array([rho] * 4))
    assert s_omega_monotonicity_witness(const, qubit_table).label is Label.CONSISTENT
    states = []
    for c in (0.4, 0.2, 0.1, 0.3):
        states.append(np.array([[0.5, c], [c, 0.5]], dtype=complex))
    v = s_omega_monotonicity_witness(Trajectory(np.arange(4.0), np.array(states)), qubit_table)
    assert v.label is Label.NON_MARKOVIAN
    assert np.isclose(v.margin, 0.2)


def test_region_examples():
    assert embeddability_region(3, 0.0) == 1.0
    assert np.isclose(embeddability_region(3, np.pi / 3), np.exp(-np.pi / 3 * np.sqrt(3)))
    assert embeddability_region(2, np.pi) == 0.0
    assert embeddability_region(2, -np.pi) == 0.0
    with pytest.raises(PreconditionError):
        embeddability_region(1, 0.0)
    phi, r = embeddability_curve(3, 361)
    assert r[180] == 1.0 and np.all(np.diff(r[180:]) <= 0)


def test_spectral_examples(rng):
    assert spectral_witness(np.eye(3)).label is Label.CONSISTENT
    v = spectral_witness(rigid_translation(3, 0.5))
    lam = v.bound_values
    assert v.label is Label.NON_MARKOVIAN
    assert np.isclose(lam["modulus"], 0.5) and np.isclose(lam["argument"], np.pi / 3)
    assert v.margin >= 0.33
    for _ in range(200):
        d = int(rng.integers(2, 6))
        P = expm(random_rates(rng, d) * rng.exponential(1.0))
        assert spectral_witness(P).label is Label.CONSISTENT


def test_random_stochastic_spectra():
    lam = karpelevic_sample(3, 10_000, seed=5)
    assert np.all(np.abs(lam) <= 1 + 1e-12)
    per_matrix = lam.reshape(-1, 3)
    assert np.all(np.min(np.abs(per_matrix - 1.0), axis=1) < 1e-10)
    outside = [z for z in lam if abs(z.imag) > 1e-9
               and abs(z) > embeddability_region(3, float(np.angle(z))) + 1e-9]
    assert len(outside) > 0
