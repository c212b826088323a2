"""Dense statevector simulation.

Basis ordering: qubit 0 is the least significant bit of the basis index, so
qubit ``q`` of an ``n``-qubit register is axis ``n - 1 - q`` of the
amplitude buffer reshaped to ``(2,) * n``.

Gate kernels act in place on that reshaped view.  ``apply_gate`` and
``apply_circuit`` consume the input state and hand back the same object, so
callers that need the original must ``copy()`` it first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

UNITARY_ATOL = 1e-10

SELF_INVERSE = {"H", "X", "Y", "Z"}
PARAMETRIC = {"PHASE", "RX", "RZ", "ZZ"}
DENSE_KINDS = {"DENSE1Q", "DENSE2Q", "DENSE"}
DIAGONAL = {"Z", "S", "PHASE", "RZ", "ZZ"}
ARITY = {"H": 1, "X": 1, "Y": 1, "Z": 1, "S": 1, "PHASE": 1, "RX": 1, "RZ": 1,
         "ZZ": 2, "DENSE1Q": 1, "DENSE2Q": 2}

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}


def is_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))) <= atol


@dataclass(frozen=True, eq=False)
class Gate:
    """A gate on ``targets`` (``targets[0]`` is the low bit of the local
    matrix index), active only when every qubit in ``controls`` is 1."""

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    theta: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        kind = self.kind
        if kind not in ARITY and kind != "DENSE":
            raise ValueError(f"unknown gate kind {kind!r}")
        if kind in PARAMETRIC and self.theta is None:
            raise ValueError(f"{kind} needs an angle")
        if kind in DENSE_KINDS:
            if self.matrix is None:
                raise ValueError(f"{kind} needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            dim = 2 ** len(self.targets)
            if m.shape != (dim, dim):
                raise ValueError(f"{kind} matrix shape {m.shape} does not match {len(self.targets)} targets")
            if not is_unitary(m):
                raise ValueError(f"{kind} matrix is not unitary within {UNITARY_ATOL:g}")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        arity = ARITY.get(kind, len(self.targets))
        if len(self.targets) != arity or arity == 0:
            raise ValueError(f"{kind} acts on {arity} qubit(s), got targets {self.targets}")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"gate qubits must be distinct, got targets={self.targets} controls={self.controls}")
        if min(qubits) < 0:
            raise ValueError("qubit indices must be non-negative")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def local_matrix(self) -> np.ndarray:
        """Matrix on the target qubits, ignoring controls."""
        k = self.kind
        if k in _FIXED:
            return _FIXED[k]
        if k in DENSE_KINDS:
            return self.matrix
        if k == "RX":
            c, s = np.cos(self.theta / 2), np.sin(self.theta / 2)
            return np.array([[c, -1j * s], [-1j * s, c]])
        return np.diag(self.diagonal())

    def diagonal(self) -> np.ndarray:
        k, t = self.kind, self.theta
        if k == "Z":
            return np.array([1, -1], dtype=complex)
        if k == "S":
            return np.array([1, 1j])
        if k == "PHASE":
            return np.array([1, np.exp(1j * t)])
        if k == "RZ":
            return np.exp(np.array([-0.5j, 0.5j]) * t)
        if k == "ZZ":
            # local index b0 + 2*b1; odd parity for indices 1 and 2
            return np.exp(np.array([-0.5j, 0.5j, 0.5j, -0.5j]) * t)
        raise ValueError(f"{k} is not diagonal")

    def inverse(self) -> Gate:
        k = self.kind
        if k in SELF_INVERSE:
            return self
        if k == "S":
            return Gate("PHASE", self.targets, self.controls, theta=-np.pi / 2)
        if k in PARAMETRIC:
            return Gate(k, self.targets, self.controls, theta=-self.theta)
        return Gate(k, self.targets, self.controls, matrix=self.matrix.conj().T)

    def with_control(self, control: int) -> Gate:
        return Gate(self.kind, self.targets, self.controls + (control,), self.theta, self.matrix)


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate) -> None:
        if max(gate.qubits) >= self.n_qubits:
            raise ValueError(f"gate {gate.kind} on {gate.qubits} out of range for {self.n_qubits} qubits")

    def append(self, gate: Gate) -> Circuit:
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> Circuit:
        for g in gates:
            self.append(g)
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def widened(self, n_qubits: int) -> Circuit:
        """Same gates on a register of ``n_qubits >= self.n_qubits``."""
        if n_qubits < self.n_qubits:
            raise ValueError("cannot shrink a circuit")
        return Circuit(n_qubits, self.gates)

    def power(self, s: int) -> Circuit:
        """The circuit repeated ``s`` times (``s = 0`` gives the empty circuit)."""
        if s < 0:
            raise ValueError("power must be non-negative")
        return Circuit(self.n_qubits, self.gates * s)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> StateVector:
        if not 0 <= index < 2 ** n_qubits:
            raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex], normalize: bool = False) -> StateVector:
        amps = np.array(amplitudes, dtype=complex)
        n = int(round(np.log2(len(amps)))) if len(amps) else -1
        if n < 0 or 2 ** n != len(amps):
            raise ValueError("amplitude count must be a power of two")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _apply_to_buffer(buf: np.ndarray, n: int, gate: Gate) -> None:
    """Apply ``gate`` in place to ``buf`` of shape ``(2,) * n + batch``."""
    nctrl = len(gate.controls)
    idx = [slice(None)] * buf.ndim
    ctrl_axes = sorted(n - 1 - c for c in gate.controls)
    for ax in ctrl_axes:
        idx[ax] = 1
    sub = buf[tuple(idx)] if nctrl else buf

    def axis_in_sub(q: int) -> int:
        ax = n - 1 - q
        return ax - sum(1 for c in ctrl_axes if c < ax)

    k = len(gate.targets)
    # most significant target first, matching the row-major split of the local index
    axes = [axis_in_sub(q) for q in reversed(gate.targets)]
    batch_dims = buf.ndim - n
    if gate.kind in DIAGONAL:
        d = gate.diagonal().reshape((2,) * k + (1,) * batch_dims)
        v = np.moveaxis(sub, axes, range(sub.ndim - k - batch_dims, sub.ndim - batch_dims))
        v *= d
        return
    v = np.moveaxis(sub, axes, range(k))
    if gate.kind == "X":
        tmp = v[0].copy()
        v[0] = v[1]
        v[1] = tmp
        return
    m = gate.local_matrix().reshape((2,) * (2 * k))
    v[...] = np.tensordot(m, v, axes=(list(range(k, 2 * k)), list(range(k))))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if max(gate.qubits) >= state.n_qubits:
        raise ValueError(f"gate {gate.kind} on {gate.qubits} out of range for {state.n_qubits} qubits")
    _apply_to_buffer(state.amplitudes.reshape((2,) * state.n_qubits), state.n_qubits, gate)
    return state


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise ValueError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    buf = state.amplitudes.reshape((2,) * state.n_qubits)
    for g in circuit.gates:
        _apply_to_buffer(buf, state.n_qubits, g)
    return state


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Assemble the dense ``2^n x 2^n`` matrix of ``circuit`` (column j is the image of basis state j)."""
    n = circuit.n_qubits
    dim = 2 ** n
    mat = np.eye(dim, dtype=complex)
    buf = mat.reshape((2,) * n + (dim,))
    for g in circuit.gates:
        _apply_to_buffer(buf, n, g)
    return mat


def controlled(circuit: Circuit, control: int) -> Circuit:
    """Every gate of ``circuit`` gains ``control`` as an extra control qubit."""
    for g in circuit.gates:
        if control in g.qubits:
            raise ValueError(f"control qubit {control} already used by gate {g.kind} on {g.qubits}")
    out = Circuit(max(circuit.n_qubits, control + 1))
    out.gates = [g.with_control(control) for g in circuit.gates]
    return out


def expectation_pauli(state: StateVector, axis: str, qubit: int) -> float:
    """<sigma_axis> on ``qubit``, normalized by the state's squared norm.

    Dividing out the norm removes the few-ulp drift that 1/sqrt(2) gate
    factors leave behind, so e.g. a state with no weight on |1> reads
    exactly +1 in Z.
    """
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    v = np.moveaxis(state.amplitudes.reshape((2,) * n), n - 1 - qubit, 0)
    a0, a1 = v[0], v[1]
    p0, p1 = np.sum(np.abs(a0) ** 2), np.sum(np.abs(a1) ** 2)
    norm2 = p0 + p1
    if norm2 == 0:
        raise ValueError("expectation of a zero state")
    axis = axis.upper()
    if axis == "Z":
        return float((p0 - p1) / norm2)
    cross = np.vdot(a0, a1)
    if axis == "X":
        return float(2.0 * cross.real / norm2)
    if axis == "Y":
        return float(2.0 * cross.imag / norm2)
    raise ValueError(f"unknown Pauli axis {axis!r}")


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_circuit(n_qubits: int, depth: int, rng: np.random.Generator,
                   control_prob: float = 0.2) -> Circuit:
    """Random circuit drawing from every gate kind; some gates get a random control."""
    kinds = ["H", "X", "Y", "Z", "S", "PHASE", "RX", "RZ", "DENSE1Q"]
    if n_qubits >= 2:
        kinds += ["ZZ", "DENSE2Q"]
    circ = Circuit(n_qubits)
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        arity = ARITY[kind]
        qubits = [int(q) for q in rng.permutation(n_qubits)]
        targets = tuple(qubits[:arity])
        controls = ()
        if n_qubits > arity and rng.random() < control_prob:
            controls = (qubits[arity],)
        theta = float(rng.uniform(-np.pi, np.pi)) if kind in PARAMETRIC else None
        matrix = random_unitary(2 ** arity, rng) if kind in DENSE_KINDS else None
        circ.append(Gate(kind, targets, controls, theta, matrix))
    return circ
