"""One-clean-qubit trace estimation with a scattering circuit.

The probe is appended as the most significant qubit (index ``n`` for an
``n``-qubit system).  After H, controlled-U and H on the probe,

    <Z_probe> = Re <psi|U|psi>,    <Y_probe> = -Im <psi|U|psi>,

so the imaginary part is reported as ``-<Y_probe>``.  A maximally mixed
system register is handled by averaging over computational basis inputs,
either all ``2^n`` of them or a uniform random sample.

Shot noise is drawn from the exact Bernoulli law of the probe readout.
Uniforms come from a counter-based Philox stream keyed by
``(seed, readout, block)`` with a fixed block size, so the counts (and hence
every estimate) do not depend on how many worker threads produced them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import SizeCapError
from .qsim import Circuit, Gate, StateVector, apply_circuit, controlled, expectation_pauli

FULL_AVERAGE_CAP = 14
SHOT_BLOCK = 1 << 16
CONVENTION_NOTE = "re=<Z_probe>, im=-<Y_probe>; probe is the top qubit; qubit 0 is the LSB"

_STREAM_Z, _STREAM_Y, _STREAM_BASIS = 0, 1, 2
_SNAP = 1e-12


def philox(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order is input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ProbeSpec:
    alpha: float = 1.0
    readout: str = "both"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"probe purity alpha must lie in (0, 1], got {self.alpha}")
        if self.readout not in ("Z", "Y", "both"):
            raise ValueError(f"readout must be 'Z', 'Y' or 'both', got {self.readout!r}")


@dataclass(frozen=True, eq=False)
class SystemInput:
    kind: str
    state: StateVector | None = None
    index: int | None = None
    mixed_strategy: str = "full_average"
    samples: int = 0
    sample_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("pure", "basis", "maximally_mixed"):
            raise ValueError(f"unknown system input kind {self.kind!r}")
        if self.kind == "pure" and self.state is None:
            raise ValueError("pure input needs a state")
        if self.kind == "basis" and (self.index is None or self.index < 0):
            raise ValueError("basis input needs a non-negative index")
        if self.mixed_strategy not in ("full_average", "sampled"):
            raise ValueError(f"unknown mixed strategy {self.mixed_strategy!r}")
        if self.kind == "maximally_mixed" and self.mixed_strategy == "sampled" and self.samples < 1:
            raise ValueError("sampled mixed input needs samples >= 1")

    @classmethod
    def pure(cls, state: StateVector) -> SystemInput:
        return cls("pure", state=state)

    @classmethod
    def basis(cls, index: int) -> SystemInput:
        return cls("basis", index=index)

    @classmethod
    def maximally_mixed(cls, samples: int | None = None, seed: int = 0) -> SystemInput:
        if samples is None:
            return cls("maximally_mixed")
        return cls("maximally_mixed", mixed_strategy="sampled", samples=samples, sample_seed=seed)

    def statevector(self, n_qubits: int) -> StateVector:
        if self.kind == "pure":
            if self.state.n_qubits != n_qubits:
                raise ValueError(f"input state has {self.state.n_qubits} qubits, system has {n_qubits}")
            return self.state.copy()
        if self.kind == "basis":
            return StateVector.basis(n_qubits, self.index)
        raise ValueError("a maximally mixed input has no single statevector")

    def describe(self) -> str:
        if self.kind == "basis":
            return f"basis:{self.index}"
        if self.kind == "pure":
            return "pure"
        if self.mixed_strategy == "sampled":
            return f"mixed:sampled({self.samples},seed={self.sample_seed})"
        return "mixed:full"


@dataclass(frozen=True)
class ProbeValue:
    """Exact probe expectations; nonzero stderr only for sampled mixed inputs."""

    re: float
    im: float
    stderr_re: float = 0.0
    stderr_im: float = 0.0
    samples: int = 1


@dataclass(frozen=True)
class EstimateResult:
    mean_re: float
    mean_im: float
    stderr_re: float
    stderr_im: float
    shots: int
    seed: int
    alpha: float = 1.0
    convention_note: str = CONVENTION_NOTE

    def to_dict(self) -> dict:
        return asdict(self)


def build_scattering_circuit(system_circuit: Circuit) -> Circuit:
    probe = system_circuit.n_qubits
    out = Circuit(probe + 1, [Gate("H", (probe,))])
    out.extend(controlled(system_circuit, probe).gates)
    out.append(Gate("H", (probe,)))
    return out


def run_scattering(scattering: Circuit, system_state: StateVector) -> tuple[float, float]:
    """(Re, Im) of <psi|U|psi> read off the probe after the scattering circuit."""
    n = scattering.n_qubits - 1
    if system_state.n_qubits != n:
        raise ValueError(f"system state has {system_state.n_qubits} qubits, circuit expects {n}")
    amps = np.zeros(2 ** (n + 1), dtype=complex)
    amps[: 2 ** n] = system_state.amplitudes  # probe (top qubit) in |0>
    out = apply_circuit(StateVector(n + 1, amps), scattering)
    return expectation_pauli(out, "Z", n), -expectation_pauli(out, "Y", n)


def _basis_values(scattering: Circuit, indices: Sequence[int], workers: int) -> np.ndarray:
    n = scattering.n_qubits - 1
    vals = parallel_map(lambda i: run_scattering(scattering, StateVector.basis(n, int(i))), list(indices), workers)
    return np.array(vals, dtype=float).reshape(len(indices), 2)


def probe_expectation(system_circuit: Circuit, system_input: SystemInput, workers: int = 1,
                      cap: int = FULL_AVERAGE_CAP) -> ProbeValue:
    scattering = build_scattering_circuit(system_circuit)
    n = system_circuit.n_qubits
    if system_input.kind != "maximally_mixed":
        re, im = run_scattering(scattering, system_input.statevector(n))
        return ProbeValue(re, im)
    if system_input.mixed_strategy == "full_average":
        if n > cap:
            raise SizeCapError(f"full basis average over {n} qubits exceeds the cap of {cap}; use a sampled strategy")
        vals = _basis_values(scattering, range(2 ** n), workers)
        re, im = vals.sum(axis=0) / 2 ** n
        return ProbeValue(float(re), float(im), samples=2 ** n)
    rng = philox(system_input.sample_seed, _STREAM_BASIS)
    drawn = rng.integers(0, 2 ** n, size=system_input.samples)
    uniq, inverse = np.unique(drawn, return_inverse=True)
    vals = _basis_values(scattering, uniq, workers)[inverse]
    m = system_input.samples
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros(2)
    return ProbeValue(float(mean[0]), float(mean[1]), float(se[0]), float(se[1]), samples=m)


def probe_expectations_exact(system_circuit: Circuit, system_input: SystemInput, workers: int = 1,
                             cap: int = FULL_AVERAGE_CAP) -> tuple[float, float]:
    """Noise-free probe readout: <psi|U|psi>, or tr(U)/2^n for a maximally mixed input."""
    pv = probe_expectation(system_circuit, system_input, workers, cap)
    return pv.re, pv.im


def outcome_probability(value: float, alpha: float) -> float:
    """P(readout = +1) for a probe of purity alpha and signal ``value``."""
    p = 0.5 * (1.0 + alpha * value)
    # roundoff guard so degenerate laws stay degenerate
    if p < _SNAP:
        return 0.0
    if p > 1.0 - _SNAP:
        return 1.0
    return p


def count_plus(p: float, shots: int, seed: int, stream: int, workers: int = 1) -> int:
    """Number of +1 outcomes among ``shots`` Bernoulli(p) draws."""
    blocks = range((shots + SHOT_BLOCK - 1) // SHOT_BLOCK)

    def one(b: int) -> int:
        size = min(SHOT_BLOCK, shots - b * SHOT_BLOCK)
        return int(np.count_nonzero(philox(seed, stream, b).random(size) < p))

    return sum(parallel_map(one, list(blocks), workers))


def _mean_and_stderr(plus: int, shots: int) -> tuple[float, float]:
    mean = (2 * plus - shots) / shots
    if shots < 2:
        return mean, 0.0
    var = max(0.0, (1.0 - mean * mean) * shots / (shots - 1))
    return mean, math.sqrt(var / shots)


def sample_probe(re: float, im: float, probe: ProbeSpec, shots: int, seed: int,
                 workers: int = 1) -> EstimateResult:
    """Shot-sampled probe readout around exact expectations ``(re, im)``.

    Z-basis outcomes are +1 with probability (1 + alpha*re)/2; Y-basis
    outcomes with probability (1 - alpha*im)/2.  Means are divided by
    alpha so the estimator is unbiased for (re, im).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    a = probe.alpha
    mean_re = se_re = mean_im = se_im = math.nan
    if probe.readout in ("Z", "both"):
        plus = count_plus(outcome_probability(re, a), shots, seed, _STREAM_Z, workers)
        z, se = _mean_and_stderr(plus, shots)
        mean_re, se_re = z / a, se / a
    if probe.readout in ("Y", "both"):
        plus = count_plus(outcome_probability(-im, a), shots, seed, _STREAM_Y, workers)
        y, se = _mean_and_stderr(plus, shots)
        mean_im, se_im = -y / a, se / a
    return EstimateResult(mean_re, mean_im, se_re, se_im, shots, seed, a)


def estimate_trace(system_circuit: Circuit, system_input: SystemInput, probe: ProbeSpec,
                   shots: int, seed: int, workers: int = 1) -> EstimateResult:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    re, im = probe_expectations_exact(system_circuit, system_input, workers)
    return sample_probe(re, im, probe, shots, seed, workers)


def required_shots(epsilon: float, p_e: float, alpha: float = 1.0) -> int:
    """ceil(ln(1/p_e) / (alpha^2 epsilon^2)) runs for accuracy epsilon at failure probability p_e."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < p_e < 1:
        raise ValueError("p_e must lie in (0, 1)")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    x = math.log(1.0 / p_e) / (alpha * alpha * epsilon * epsilon)
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, x):
        return max(1, int(r))
    return max(1, math.ceil(x))
