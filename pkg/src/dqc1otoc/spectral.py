"""Eigenphase density of the OTOC operator from traces of its powers.

    f(u) = (1/N2) * sum_{s=0}^{N2-1} exp(-i k 2 pi u s / N2) tr[O^s rho0],   N2 = 2^n2

with O the OTOC operator, k = 1 for the standard kernel and k = 2 for the
``paper_4pi`` kernel.  With k = 1 an eigenphase phi lands in bin
u = phi N2 / (2 pi) (mod N2).  The traces come either from dense matrix
powers (``path="oracle"``) or from the probe readout of the scattering
circuit run on s back-to-back copies of the OTOC circuit (``path="circuit"``).
f is reported as the real part of the sum; the largest imaginary part is
kept in ``imag_residual`` and vanishes only when every eigenphase sits on
the bin grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import oracle
from .dqc1 import SystemInput, parallel_map, probe_expectations_exact
from .errors import SizeCapError
from .otoc import OtocSpec, build_otoc_system_circuit
from .qsim import Circuit

KERNELS = {"standard_2pi": 1, "paper_4pi": 2}
MAX_N2 = 12
CIRCUIT_BUDGET = 20_000_000  # gate applications


@dataclass(frozen=True, eq=False)
class SpectralSpec:
    otoc: OtocSpec
    n2: int
    phase_convention: str = "standard_2pi"
    rho0: SystemInput | None = None

    def __post_init__(self):
        if self.n2 < 1:
            raise ValueError("n2 must be >= 1")
        if self.phase_convention not in KERNELS:
            raise ValueError(f"phase_convention must be one of {tuple(KERNELS)}, got {self.phase_convention!r}")

    @property
    def system_input(self) -> SystemInput:
        return self.rho0 if self.rho0 is not None else self.otoc.input


@dataclass
class SpectralResult:
    n2: int
    f: np.ndarray
    convention: str
    normalization_residual: float
    imag_residual: float
    path: str
    traces: np.ndarray = field(repr=False)

    @property
    def n_bins(self) -> int:
        return 2 ** self.n2

    def bin_phase(self, u) -> np.ndarray:
        """Eigenphase (in (-pi, pi]) that bin ``u`` represents."""
        k = KERNELS[self.convention]
        return oracle.wrap_phases(2 * np.pi * k * np.asarray(u, dtype=float) / self.n_bins)

    @property
    def bin_width(self) -> float:
        return 2 * np.pi * KERNELS[self.convention] / self.n_bins


class Peak(NamedTuple):
    u: int
    weight: float
    phase: float
    centroid: float


def power_traces_matrix(op: np.ndarray, rho0: SystemInput, n_bins: int) -> np.ndarray:
    """tr[O^s rho0] for s = 0..n_bins-1 by repeated dense multiplication."""
    op = np.asarray(op, dtype=complex)
    dim = op.shape[0]
    out = np.empty(n_bins, dtype=complex)
    if rho0.kind == "maximally_mixed":
        p = np.eye(dim, dtype=complex)
        for s in range(n_bins):
            out[s] = np.trace(p) / dim
            p = op @ p
        return out
    psi = rho0.statevector(int(round(np.log2(dim)))).amplitudes
    phi = psi.copy()
    for s in range(n_bins):
        out[s] = np.vdot(psi, phi)
        phi = op @ phi
    return out


def power_traces_circuit(circuit: Circuit, rho0: SystemInput, n_bins: int, workers: int = 1) -> np.ndarray:
    """tr[O^s rho0] for s = 0..n_bins-1, each read off a separate scattering-circuit run on s copies."""
    runs = 1
    if rho0.kind == "maximally_mixed":
        runs = 2 ** circuit.n_qubits if rho0.mixed_strategy == "full_average" else rho0.samples
    cost = runs * len(circuit) * n_bins * (n_bins - 1) // 2
    if cost > CIRCUIT_BUDGET:
        raise SizeCapError(f"circuit path needs ~{cost:.3g} gate applications (budget {CIRCUIT_BUDGET:.3g})")
    vals = parallel_map(lambda s: probe_expectations_exact(circuit.power(s), rho0), list(range(n_bins)), workers)
    return np.array([complex(re, im) for re, im in vals])


def spectral_from_traces(traces: np.ndarray, n2: int, convention: str = "standard_2pi",
                         path: str = "given") -> SpectralResult:
    n_bins = 2 ** n2
    traces = np.asarray(traces, dtype=complex)
    if traces.shape != (n_bins,):
        raise ValueError(f"need {n_bins} traces, got {traces.shape}")
    k = KERNELS[convention]
    u = np.arange(n_bins)
    s = np.arange(n_bins)
    kernel = np.exp(-2j * np.pi * k * np.outer(u, s) / n_bins)
    f_c = kernel @ traces / n_bins
    raw_sum = float(np.sum(f_c.real))
    residual = raw_sum - 1.0
    f = f_c.real.copy()
    if convention != "standard_2pi" and abs(raw_sum) > 1e-12:
        f /= raw_sum
    return SpectralResult(n2, f, convention, residual, float(np.max(np.abs(f_c.imag))), path, traces)


def estimate_spectral_density(spec: SpectralSpec, path: str = "oracle", workers: int = 1) -> SpectralResult:
    """Binned eigenphase density of the OTOC operator.

    The oracle path always evolves exactly; compare it with the circuit
    path only for ``method="exact"`` specs in the corrected gate order.
    """
    if spec.n2 > MAX_N2:
        raise SizeCapError(f"n2={spec.n2} exceeds the cap of {MAX_N2}")
    n_bins = 2 ** spec.n2
    if path == "oracle":
        traces = power_traces_matrix(oracle.otoc_operator(spec.otoc), spec.system_input, n_bins)
    elif path == "circuit":
        traces = power_traces_circuit(build_otoc_system_circuit(spec.otoc), spec.system_input, n_bins, workers)
    else:
        raise ValueError(f"path must be 'oracle' or 'circuit', got {path!r}")
    return spectral_from_traces(traces, spec.n2, spec.phase_convention, path)


def circuit_spectral_density(circuit: Circuit, n2: int, rho0: SystemInput,
                             convention: str = "standard_2pi", workers: int = 1) -> SpectralResult:
    """Eigenphase density of an arbitrary system circuit through the probe readout."""
    if n2 > MAX_N2:
        raise SizeCapError(f"n2={n2} exceeds the cap of {MAX_N2}")
    traces = power_traces_circuit(circuit, rho0, 2 ** n2, workers)
    return spectral_from_traces(traces, n2, convention, "circuit")


def _window(n: int, u: int) -> list[int]:
    return sorted({(u - 1) % n, u, (u + 1) % n})


def eigenphase_peaks(result: SpectralResult, min_weight: float) -> list[Peak]:
    """Local maxima of f whose positive mass within one bin either side is at least ``min_weight``.

    The real part of the one-sided Fourier sum sits on a floor of about
    1/(2 N2) per unit weight away from the grid, so mass is only collected
    from the immediate neighbourhood of each maximum.
    """
    f = result.f
    n = len(f)
    peaks = []
    for u in range(n):
        if n > 1 and not (f[u] >= f[(u - 1) % n] and f[u] > f[(u + 1) % n]):
            continue
        win = _window(n, u)
        mass = np.clip(f[win], 0.0, None)
        weight = float(np.sum(mass))
        if weight < min_weight:
            continue
        centroid = float(np.angle(np.sum(mass * np.exp(1j * result.bin_phase(win)))))
        peaks.append(Peak(u, weight, float(result.bin_phase(u)), centroid))
    return peaks


def peak_half_width(result: SpectralResult, u: int) -> float:
    """Half width at half maximum of the peak at bin ``u``, in radians."""
    f = result.f
    n = len(f)
    half = f[u] / 2
    count = 1
    for step in (-1, 1):
        j = (u + step) % n
        while j != u and f[j] >= half and count < n:
            count += 1
            j = (j + step) % n
    return count * result.bin_width / 2
