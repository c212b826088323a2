"""Ising chain Hamiltonians, local operators and circuits for U(tau).

The chain is

    H = sum_<ij> J Z_i Z_j + sum_i (h_x X_i + h_z Z_i)

with site ``i`` living on qubit ``i``.  The evolution sign is explicit:
``sign="minus"`` is U = exp(-iH tau), ``sign="plus"`` is U = exp(+iH tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeCapError
from .qsim import Circuit, Gate, is_unitary

ORACLE_CAP = 12
METHODS = ("exact", "trotter1", "trotter2")
SIGNS = {"minus": -1, "plus": +1}
SIGN_LABELS = {"minus": "exp(-iHt)", "plus": "exp(+iHt)"}
AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class IsingChainSpec:
    n_sites: int
    J: float = 1.0
    h_x: float = 1.05
    h_z: float = 0.5
    boundary: str = "open"

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if not all(math.isfinite(x) for x in (self.J, self.h_x, self.h_z)):
            raise ValueError("Ising parameters must be finite")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")

    def bonds(self) -> list[tuple[int, int]]:
        pairs = [(i, i + 1) for i in range(self.n_sites - 1)]
        # two sites already share their only bond
        if self.boundary == "periodic" and self.n_sites > 2:
            pairs.append((self.n_sites - 1, 0))
        return pairs


PRESETS = {
    "chaotic-default": dict(J=1.0, h_x=1.05, h_z=0.5),
    "integrable-default": dict(J=1.0, h_x=1.05, h_z=0.0),
    # only ZZ and Z terms: everything commutes with Z_i
    "z-only": dict(J=1.0, h_x=0.0, h_z=0.5),
}


def preset(name: str, n_sites: int, boundary: str = "open") -> IsingChainSpec:
    try:
        params = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}; known: {sorted(PRESETS)}") from None
    return IsingChainSpec(n_sites=n_sites, boundary=boundary, **params)


@dataclass(frozen=True)
class EvolutionSpec:
    tau: float
    method: str = "exact"
    steps: int = 1
    sign: str = "minus"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {tuple(SIGNS)}, got {self.sign!r}")
        if self.method != "exact" and self.steps < 1:
            raise ValueError("Trotter evolution needs steps >= 1")
        if not math.isfinite(self.tau):
            raise ValueError("tau must be finite")

    @property
    def sign_value(self) -> int:
        return SIGNS[self.sign]

    @property
    def sign_label(self) -> str:
        return SIGN_LABELS[self.sign]


@dataclass(frozen=True)
class LocalPauli:
    site: int
    axis: str

    def __post_init__(self):
        object.__setattr__(self, "axis", self.axis.upper())
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.site < 0:
            raise ValueError("site must be non-negative")

    def __str__(self):
        return f"{self.axis}{self.site}"


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """Arbitrary single-site unitary, for W or V beyond the Pauli case."""

    site: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2) or not is_unitary(m):
            raise ValueError("LocalUnitary needs a 2x2 unitary matrix")
        object.__setattr__(self, "matrix", m)

    def __str__(self):
        return f"U{self.site}"


def _check_site(n_sites: int, op) -> None:
    if op.site >= n_sites:
        raise ValueError(f"site {op.site} out of range for a chain of {n_sites}")


def pauli_gate(op: LocalPauli) -> Gate:
    return Gate(op.axis, (op.site,))


def local_gate(op: LocalPauli | LocalUnitary, adjoint: bool = False) -> Gate:
    if isinstance(op, LocalPauli):
        return pauli_gate(op)  # Hermitian: its own adjoint
    m = op.matrix.conj().T if adjoint else op.matrix
    return Gate("DENSE1Q", (op.site,), matrix=m)


def build_ising_hamiltonian(spec: IsingChainSpec, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense real-symmetric Hamiltonian matrix in the LSB-first basis."""
    n = spec.n_sites
    if n > cap:
        raise SizeCapError(f"dense Hamiltonian for {n} sites exceeds the cap of {cap}")
    dim = 2 ** n
    idx = np.arange(dim)
    z = 1.0 - 2.0 * ((idx[None, :] >> np.arange(n)[:, None]) & 1)
    diag = np.zeros(dim)
    for i, j in spec.bonds():
        diag += spec.J * z[i] * z[j]
    diag += spec.h_z * z.sum(axis=0)
    ham = np.diag(diag)
    if spec.h_x != 0.0:
        for q in range(n):
            ham[idx ^ (1 << q), idx] += spec.h_x
    return ham


def _diagonal_layer(spec: IsingChainSpec, angle_scale: float) -> list[Gate]:
    """Gates for exp(i * angle_scale * (H_zz + H_z))."""
    gates = []
    theta_zz = -2.0 * angle_scale * spec.J
    if theta_zz != 0.0:
        gates += [Gate("ZZ", (i, j), theta=theta_zz) for i, j in spec.bonds()]
    theta_z = -2.0 * angle_scale * spec.h_z
    if theta_z != 0.0:
        gates += [Gate("RZ", (q,), theta=theta_z) for q in range(spec.n_sites)]
    return gates


def _x_layer(spec: IsingChainSpec, angle_scale: float) -> list[Gate]:
    theta = -2.0 * angle_scale * spec.h_x
    if theta == 0.0:
        return []
    return [Gate("RX", (q,), theta=theta) for q in range(spec.n_sites)]


def build_evolution_circuit(spec: IsingChainSpec, evo: EvolutionSpec) -> Circuit:
    """Circuit for U(tau).  ``exact`` emits one dense gate and is meant for testing."""
    n = spec.n_sites
    if evo.tau == 0:
        return Circuit(n)  # exactly the identity, as Trotter layers would be with every angle zero
    if evo.method == "exact":
        from .oracle import exact_unitary

        u = exact_unitary(spec, evo.tau, evo.sign)
        return Circuit(n, [Gate("DENSE", tuple(range(n)), matrix=u)])
    dt = evo.tau / evo.steps
    scale = evo.sign_value * dt
    circ = Circuit(n)
    for _ in range(evo.steps):
        if evo.method == "trotter1":
            circ.extend(_x_layer(spec, scale))
            circ.extend(_diagonal_layer(spec, scale))
        else:
            circ.extend(_diagonal_layer(spec, scale / 2))
            circ.extend(_x_layer(spec, scale))
            circ.extend(_diagonal_layer(spec, scale / 2))
    return circ
