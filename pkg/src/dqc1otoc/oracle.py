"""Brute-force dense-matrix ground truth.

Everything here is assembled from explicit ``2^n x 2^n`` matrices and is
independent of the circuit simulator.  Time evolution always uses the exact
propagator of the spec's sign, whatever Trotter method an ``OtocSpec`` asks
for: the oracle is what Trotter circuits are compared against.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import SizeCapError
from .models import (
    ORACLE_CAP,
    SIGNS,
    IsingChainSpec,
    LocalPauli,
    LocalUnitary,
    build_ising_hamiltonian,
)

EIGENPHASE_CAP = 10
NESTED_CAP = 10
NESTED_K_MAX = 8
RESIDUAL_ATOL = 1e-10

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DenseOperator(np.ndarray):
    """A square complex matrix that can vouch for its own unitarity/Hermiticity."""

    def __new__(cls, entries):
        arr = np.asarray(entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("DenseOperator must be square")
        if not np.all(np.isfinite(arr)):
            raise ValueError("DenseOperator entries must be finite")
        return arr.view(cls)

    @property
    def dim(self) -> int:
        return self.shape[0]

    def unitarity_residual(self) -> float:
        a = np.asarray(self)
        return float(np.max(np.abs(a.conj().T @ a - np.eye(self.dim))))

    def hermiticity_residual(self) -> float:
        a = np.asarray(self)
        return float(np.max(np.abs(a - a.conj().T)))

    def assert_unitary(self, atol: float = RESIDUAL_ATOL) -> DenseOperator:
        r = self.unitarity_residual()
        if r > atol:
            raise AssertionError(f"operator not unitary: residual {r:.3g} > {atol:g}")
        return self

    def assert_hermitian(self, atol: float = RESIDUAL_ATOL) -> DenseOperator:
        r = self.hermiticity_residual()
        if r > atol:
            raise AssertionError(f"operator not Hermitian: residual {r:.3g} > {atol:g}")
        return self


def _cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise SizeCapError(f"{what} for {n} qubits exceeds the dense cap of {cap}")


@lru_cache(maxsize=16)
def ising_eigh(model: IsingChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and (real orthogonal) eigenvectors of the chain Hamiltonian."""
    evals, evecs = np.linalg.eigh(build_ising_hamiltonian(model))
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return evals, evecs


def exact_unitary(model: IsingChainSpec, tau: float, sign: str = "minus") -> DenseOperator:
    """exp(-iH tau) for sign="minus", exp(+iH tau) for sign="plus"."""
    _cap(model.n_sites, ORACLE_CAP, "exact evolution")
    evals, q = ising_eigh(model)
    phases = np.exp(1j * SIGNS[sign] * evals * tau)
    return DenseOperator((q * phases) @ q.T)


def local_operator(n: int, op: LocalPauli | LocalUnitary) -> DenseOperator:
    """Single-site operator embedded in the n-qubit space (qubit 0 = LSB)."""
    if op.site >= n:
        raise ValueError(f"site {op.site} out of range for {n} qubits")
    m = _PAULI[op.axis] if isinstance(op, LocalPauli) else op.matrix
    return DenseOperator(np.kron(np.kron(np.eye(2 ** (n - 1 - op.site)), m), np.eye(2 ** op.site)))


def heisenberg_operator(w: np.ndarray, u: np.ndarray) -> DenseOperator:
    """U^dagger W U."""
    w, u = np.asarray(w), np.asarray(u)
    if w.shape != u.shape:
        raise ValueError(f"dimension mismatch: W {w.shape} vs U {u.shape}")
    return DenseOperator(u.conj().T @ w @ u)


def _conjugate_real(q: np.ndarray, m: np.ndarray) -> np.ndarray:
    """q @ m @ q.T for real q, done as real products on the parts of m."""
    # contiguous parts keep the products on the BLAS path
    re, im = np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)
    return (q @ re @ q.T) + 1j * (q @ im @ q.T)


@lru_cache(maxsize=64)
def _local_in_eigenbasis(model: IsingChainSpec, op) -> np.ndarray:
    evals, q = ising_eigh(model)
    out = _conjugate_real(q.T, np.asarray(local_operator(model.n_sites, op)))
    out.setflags(write=False)
    return out


def evolved_local(model: IsingChainSpec, op, tau: float, sign: str = "minus") -> DenseOperator:
    """W(tau) = U^dagger W U for a local operator, computed in the energy eigenbasis."""
    _cap(model.n_sites, ORACLE_CAP, "Heisenberg evolution")
    evals, q = ising_eigh(model)
    phase = np.exp(1j * SIGNS[sign] * evals * tau)
    w_eig = _local_in_eigenbasis(model, op)
    return DenseOperator(_conjugate_real(q, phase.conj()[:, None] * w_eig * phase[None, :]))


def otoc_operator(spec) -> DenseOperator:
    """W(tau)^dagger V^dagger W(tau) V."""
    n = spec.model.n_sites
    _cap(n, ORACLE_CAP, "OTOC operator")
    wt = np.asarray(evolved_local(spec.model, spec.w, spec.evolution.tau, spec.evolution.sign))
    v = np.asarray(local_operator(n, spec.v))
    return DenseOperator(wt.conj().T @ v.conj().T @ wt @ v)


def expectation(op: np.ndarray, system_input) -> complex:
    """<op> under a pure/basis input, or tr(op)/2^n for a maximally mixed one."""
    op = np.asarray(op)
    kind = system_input.kind
    if kind == "maximally_mixed":
        return complex(np.trace(op) / op.shape[0])
    psi = system_input.statevector(int(np.log2(op.shape[0]))).amplitudes
    return complex(np.vdot(psi, op @ psi))


def otoc_expectation(spec) -> complex:
    return expectation(otoc_operator(spec), spec.input)


def c_wv_commutator(spec) -> float:
    """Half the expectation of [W(tau), V]^dagger [W(tau), V]."""
    n = spec.model.n_sites
    _cap(n, ORACLE_CAP, "commutator OTOC")
    wt = np.asarray(evolved_local(spec.model, spec.w, spec.evolution.tau, spec.evolution.sign))
    v = np.asarray(local_operator(n, spec.v))
    comm = wt @ v - v @ wt
    if spec.input.kind == "maximally_mixed":
        return float(0.5 * np.sum(np.abs(comm) ** 2) / comm.shape[0])
    psi = spec.input.statevector(n).amplitudes
    return float(0.5 * np.linalg.norm(comm @ psi) ** 2)


def nested_commutator_norms(model: IsingChainSpec, w, k_max: int) -> list[float]:
    """Operator 2-norms of ad_H^k(W) = [H, [H, ... [H, W]]] for k = 0..k_max."""
    if k_max > NESTED_K_MAX or k_max < 0:
        raise SizeCapError(f"k_max must lie in [0, {NESTED_K_MAX}], got {k_max}")
    _cap(model.n_sites, NESTED_CAP, "nested commutators")
    ham = build_ising_hamiltonian(model)
    term = np.asarray(local_operator(model.n_sites, w))
    norms = [float(np.linalg.norm(term, 2))]
    for _ in range(k_max):
        term = ham @ term - term @ ham
        norms.append(float(np.linalg.norm(term, 2)))
    return norms


def wrap_phases(phases: np.ndarray) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    out = np.atleast_1d(np.mod(np.asarray(phases, dtype=float) + np.pi, 2 * np.pi) - np.pi)
    out[np.isclose(out, -np.pi, atol=1e-12, rtol=0)] = np.pi
    return out if np.ndim(phases) else out[0]


def otoc_eigenphases(spec) -> np.ndarray:
    """Sorted eigenphases of the OTOC operator in (-pi, pi]."""
    _cap(spec.model.n_sites, EIGENPHASE_CAP, "OTOC eigenphases")
    evals = np.linalg.eigvals(np.asarray(otoc_operator(spec)))
    return np.sort(wrap_phases(np.angle(evals)))


def apply_local_right(a: np.ndarray, m: np.ndarray, site: int, n: int) -> np.ndarray:
    """A @ (I x m x I) with ``m`` acting on qubit ``site``, without forming the kron."""
    dim = a.shape[0]
    t = a.reshape(dim, 2 ** (n - 1 - site), 2, 2 ** site)
    return np.einsum("xaib,ij->xajb", t, m).reshape(a.shape)


def otoc_profile(model: IsingChainSpec, w, vs: list, tau: float, sign: str, system_input) -> list[complex]:
    """<W(tau)^dag V^dag W(tau) V> for each V in ``vs`` sharing one W(tau).

    Uses O(4^n) work per V on top of one W(tau), which is what makes
    full-chain light-cone sweeps affordable at n = 10.
    """
    n = model.n_sites
    wt = np.asarray(evolved_local(model, w, tau, sign))
    wt_dag = wt.conj().T
    mats = [_PAULI[v.axis] if isinstance(v, LocalPauli) else v.matrix for v in vs]
    out = []
    if system_input.kind == "maximally_mixed":
        for v, m in zip(vs, mats):
            b = apply_local_right(wt, m, v.site, n)
            a = apply_local_right(wt_dag, m.conj().T, v.site, n)
            out.append(complex(np.sum(a * b.T) / wt.shape[0]))
        return out
    psi = system_input.statevector(n).amplitudes
    x = wt @ psi
    for v, m in zip(vs, mats):
        vpsi = apply_local_right(psi[None, :], m.T, v.site, n)[0]  # (I x m x I) psi
        y = wt @ vpsi
        vx = apply_local_right(x[None, :], m.T, v.site, n)[0]
        out.append(complex(np.vdot(vx, y)))
    return out
