"""Open-system dynamics under time-translation symmetry.

Optimal coherence bounds for covariant channels and Lindbladians, the
generators and channels that attain them, T1/T2 relations, coherence
transfer scenarios and non-Markovianity witnesses.
"""

from .errors import CovcohError
from .linalg import Trajectory, eigvals, expm, integrate_linear, integrate_rk, psd_check
from .spectrum import Hamiltonian, ModeTable, bohr_modes, decompose, s_omega
from .channels import CovariantChannel, apply, bound_nm, choi, is_covariant, saturating_channel, validate
from .lindblad import (CovariantGenerator, bound_trajectory, evolve, lindbladian_action,
                       mode_propagator, optimal_generator, phase_matching,
                       population_generator, verify_covariance)
from .relaxometry import harmonic_bound_check, t1_times, t2_times, thermal_t1_hmean
from .thermo import detailed_balance_check, gibbs, gto_qubit_bounds, qdb_check, transport_bounds_check
from .witness import (QubitSnapshot, Verdict, embeddability_region, karpelevic_sample,
                      qubit_snapshot_witness, s_omega_monotonicity_witness, spectral_witness)

__version__ = "0.1.0"
