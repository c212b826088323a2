"""Statevector simulation of one-clean-qubit algorithms for out-of-time-ordered correlators."""

from .dqc1 import (
    EstimateResult,
    ProbeSpec,
    SystemInput,
    build_scattering_circuit,
    estimate_trace,
    probe_expectations_exact,
    required_shots,
)
from .errors import ConfigError, SizeCapError
from .models import (
    EvolutionSpec,
    IsingChainSpec,
    LocalPauli,
    LocalUnitary,
    build_evolution_circuit,
    build_ising_hamiltonian,
    pauli_gate,
    preset,
)
from .otoc import (
    OtocPoint,
    OtocSpec,
    build_otoc_system_circuit,
    estimate_otoc,
    lightcone_sweep,
    otoc_expectation,
)
from .qsim import (
    Circuit,
    Gate,
    StateVector,
    apply_circuit,
    apply_gate,
    circuit_unitary,
    controlled,
    expectation_pauli,
)
from .spectral import SpectralResult, SpectralSpec, eigenphase_peaks, estimate_spectral_density

__version__ = "0.1.0"
