"""OTOC estimation through the one-clean-qubit scattering circuit.

The system circuit realizes W(tau)^dag V^dag W(tau) V with W(tau) = U^dag W U,
applied in time order V, U, W, U^dag, V^dag, U, W^dag, U^dag.  The
``gate_order="literal"`` variant instead ends with U^dag, W, U, which
assembles to (U W U^dag) V^dag (U^dag W U) V and is kept for comparison.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import oracle
from .dqc1 import (
    ProbeSpec,
    SystemInput,
    parallel_map,
    probe_expectations_exact,
    sample_probe,
)
from .models import (
    EvolutionSpec,
    IsingChainSpec,
    LocalPauli,
    LocalUnitary,
    build_evolution_circuit,
    local_gate,
)
from .qsim import Circuit

DEFAULT_THRESHOLD = 0.05
GATE_ORDERS = ("corrected", "literal")


@dataclass(frozen=True, eq=False)
class OtocSpec:
    model: IsingChainSpec
    evolution: EvolutionSpec
    w: LocalPauli | LocalUnitary
    v: LocalPauli | LocalUnitary
    input: SystemInput = field(default_factory=SystemInput.maximally_mixed)
    gate_order: str = "corrected"

    def __post_init__(self):
        n = self.model.n_sites
        for name, op in (("w", self.w), ("v", self.v)):
            if op.site >= n:
                raise ValueError(f"{name} site {op.site} out of range for a chain of {n}")
        if self.gate_order not in GATE_ORDERS:
            raise ValueError(f"gate_order must be one of {GATE_ORDERS}, got {self.gate_order!r}")

    def at(self, tau: float) -> OtocSpec:
        return replace(self, evolution=replace(self.evolution, tau=tau))


@dataclass(frozen=True)
class OtocPoint:
    tau: float
    re: float
    im: float
    c_value: float
    stderr_re: float
    stderr_im: float
    shots: int
    seed: int
    input: str
    sign_convention: str
    alpha: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def build_otoc_system_circuit(spec: OtocSpec) -> Circuit:
    n = spec.model.n_sites
    u = build_evolution_circuit(spec.model, spec.evolution)
    u_dag = u.inverse()
    circ = Circuit(n)
    circ.append(local_gate(spec.v))
    circ.extend(u.gates)
    circ.append(local_gate(spec.w))
    circ.extend(u_dag.gates)
    circ.append(local_gate(spec.v, adjoint=True))
    if spec.gate_order == "corrected":
        circ.extend(u.gates)
        circ.append(local_gate(spec.w, adjoint=True))
        circ.extend(u_dag.gates)
    else:
        circ.extend(u_dag.gates)
        circ.append(local_gate(spec.w))
        circ.extend(u.gates)
    return circ


def otoc_expectation(spec: OtocSpec, workers: int = 1) -> tuple[float, float]:
    """Exact (Re, Im) of the OTOC from the noise-free probe readout."""
    return probe_expectations_exact(build_otoc_system_circuit(spec), spec.input, workers)


def _point(spec: OtocSpec, re, im, se_re=0.0, se_im=0.0, shots=0, seed=0, alpha=1.0) -> OtocPoint:
    return OtocPoint(
        tau=float(spec.evolution.tau), re=float(re), im=float(im), c_value=1.0 - float(re),
        stderr_re=float(se_re), stderr_im=float(se_im), shots=int(shots), seed=int(seed),
        input=spec.input.describe(), sign_convention=spec.evolution.sign_label, alpha=float(alpha),
    )


def exact_otoc_point(spec: OtocSpec, workers: int = 1) -> OtocPoint:
    re, im = otoc_expectation(spec, workers)
    return _point(spec, re, im)


def estimate_otoc(spec: OtocSpec, probe: ProbeSpec, shots: int, seed: int, workers: int = 1) -> OtocPoint:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    re, im = otoc_expectation(spec, workers)
    est = sample_probe(re, im, probe, shots, seed, workers)
    return _point(spec, est.mean_re, est.mean_im, est.stderr_re, est.stderr_im, shots, seed, probe.alpha)


def point_seed(seed: int, *grid_index: int) -> int:
    """Deterministic per-grid-point seed derived from the run seed."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(grid_index)).generate_state(1)[0])


@dataclass(frozen=True)
class LightconePoint:
    d: int
    v_site: int
    tau: float
    c: float
    re: float
    stderr_c: float
    arrival_flag: bool


@dataclass
class LightconeResult:
    points: list[LightconePoint]
    arrival_times: dict[int, float | None]
    threshold: float

    def c_matrix(self) -> np.ndarray:
        """C as an array indexed [v_site position, tau index]."""
        sites = sorted({p.v_site for p in self.points})
        taus = sorted({p.tau for p in self.points})
        out = np.empty((len(sites), len(taus)))
        for p in self.points:
            out[sites.index(p.v_site), taus.index(p.tau)] = p.c
        return out


def arrival_time(taus: Sequence[float], c_values: Sequence[float], threshold: float) -> float | None:
    """Smallest tau with C(tau) > threshold, or None if never reached on the grid."""
    for t, c in zip(taus, c_values):
        if c > threshold:
            return float(t)
    return None


def lightcone_sweep(model: IsingChainSpec, evolution: EvolutionSpec, taus: Sequence[float],
                    w: LocalPauli, v_axis: str = "Z", system_input: SystemInput | None = None,
                    shots: int | None = None, seed: int = 0, probe: ProbeSpec | None = None,
                    threshold: float = DEFAULT_THRESHOLD, backend: str = "oracle",
                    workers: int = 1) -> LightconeResult:
    """C(d, tau) for V = sigma_{v_axis} on every site, d = |v_site - w_site|.

    ``backend="oracle"`` takes the exact OTOC from dense matrices (the only
    affordable route for long chains); ``"circuit"`` reads it off the
    simulated probe.  With ``shots`` the value is then shot-sampled.
    ``evolution.tau`` is ignored; the grid supplies the times.
    """
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("empty tau grid")
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau grid must be ascending")
    if backend not in ("oracle", "circuit"):
        raise ValueError(f"backend must be 'oracle' or 'circuit', got {backend!r}")
    system_input = system_input or SystemInput.maximally_mixed()
    probe = probe or ProbeSpec()
    vs = [LocalPauli(site, v_axis) for site in range(model.n_sites)]

    def column(ti: int) -> list[complex]:
        evo = replace(evolution, tau=taus[ti])
        if backend == "oracle":
            return oracle.otoc_profile(model, w, vs, taus[ti], evolution.sign, system_input)
        vals = []
        for v in vs:
            re, im = otoc_expectation(OtocSpec(model, evo, w, v, system_input))
            vals.append(complex(re, im))
        return vals

    grid = parallel_map(column, list(range(len(taus))), workers)  # [tau][site]
    points, arrivals = [], {}
    for si, v in enumerate(vs):
        d = abs(v.site - w.site)
        cs, ses = [], []
        for ti in range(len(taus)):
            val = grid[ti][si]
            re, se = val.real, 0.0
            if shots:
                est = sample_probe(val.real, val.imag, replace(probe, readout="Z"), shots,
                                   point_seed(seed, si, ti), workers)
                re, se = est.mean_re, est.stderr_re
            cs.append(1.0 - re)
            ses.append(se)
        t_arr = arrival_time(taus, cs, threshold)
        arrivals[v.site] = t_arr
        for ti, t in enumerate(taus):
            points.append(LightconePoint(d, v.site, t, cs[ti], 1.0 - cs[ti], ses[ti], t == t_arr))
    return LightconeResult(points, arrivals, threshold)
