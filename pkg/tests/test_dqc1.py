import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import embed_circuit
from dqc1otoc.dqc1 import (
    ProbeSpec,
    SystemInput,
    build_scattering_circuit,
    count_plus,
    estimate_trace,
    outcome_probability,
    probe_expectation,
    probe_expectations_exact,
    required_shots,
    sample_probe,
)
from dqc1otoc.errors import SizeCapError
from dqc1otoc.qsim import Circuit, Gate, StateVector, apply_circuit, expectation_pauli, random_circuit

ID1 = Circuit(1)
SIGMA_X = Circuit(1, [Gate("X", (0,))])


def probe_p0(system, state):
    n = system.n_qubits
    amps = np.zeros(2 ** (n + 1), dtype=complex)
    amps[: 2 ** n] = state.amplitudes
    out = apply_circuit(StateVector(n + 1, amps), build_scattering_circuit(system))
    return float(np.sum(np.abs(out.amplitudes[: 2 ** n]) ** 2))


def test_scattering_shape():
    sc = build_scattering_circuit(Circuit(2, [Gate("X", (0,))]))
    assert sc.n_qubits == 3
    assert [g.kind for g in sc] == ["H", "X", "H"]
    assert sc.gates[1].controls == (2,)


def test_empty_system_returns_probe_to_zero():
    assert probe_p0(Circuit(2), StateVector.zero(2)) == pytest.approx(1.0, abs=1e-15)


def test_x_system_gives_half():
    assert probe_p0(SIGMA_X, StateVector.zero(1)) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_random_system_matches_dense(seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(3, 40, rng)
    u = embed_circuit(circ)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    re, im = probe_expectations_exact(circ, SystemInput.pure(StateVector(3, psi)))
    ref = np.vdot(psi, u @ psi)
    assert abs(re - ref.real) < 1e-10 and abs(im - ref.imag) < 1e-10
    assert abs(2 * probe_p0(circ, StateVector(3, psi)) - 1 - ref.real) < 1e-10


@pytest.mark.parametrize("inp", [SystemInput.basis(0), SystemInput.basis(3), SystemInput.maximally_mixed(),
                                 SystemInput.maximally_mixed(samples=5, seed=1)])
def test_identity_any_input(inp):
    assert probe_expectations_exact(Circuit(2), inp) == pytest.approx((1.0, 0.0), abs=1e-14)


@pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 2, 2.5, np.pi])
def test_phase_gate_mixed(theta):
    re, im = probe_expectations_exact(Circuit(1, [Gate("PHASE", (0,), theta=theta)]), SystemInput.maximally_mixed())
    assert re == pytest.approx((1 + math.cos(theta)) / 2, abs=1e-14)
    assert im == pytest.approx(math.sin(theta) / 2, abs=1e-14)


def test_sigma_x_mixed_is_traceless():
    assert probe_expectations_exact(SIGMA_X, SystemInput.maximally_mixed()) == pytest.approx((0, 0), abs=1e-15)


def test_y_readout_sign():
    # <sigma_y> on the probe comes out as -Im<U>
    circ = Circuit(1, [Gate("S", (0,))])
    n = 1
    amps = np.zeros(4, dtype=complex)
    amps[1] = 1.0
    out = apply_circuit(StateVector(2, amps), build_scattering_circuit(circ))
    assert expectation_pauli(out, "Y", n) == pytest.approx(-1.0, abs=1e-14)
    assert probe_expectations_exact(circ, SystemInput.basis(1)) == pytest.approx((0.0, 1.0), abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_full_average_equals_normalized_trace(n, rng):
    circ = random_circuit(n, 30, rng)
    tr = np.trace(embed_circuit(circ)) / 2 ** n
    re, im = probe_expectations_exact(circ, SystemInput.maximally_mixed())
    assert abs(re - tr.real) < 1e-10 and abs(im - tr.imag) < 1e-10


def test_sampled_mixed_converges(rng):
    circ = random_circuit(6, 30, rng)
    tr = np.trace(embed_circuit(circ)) / 64
    errs, ses = [], []
    for m in (16, 256, 4096):
        pv = probe_expectation(circ, SystemInput.maximally_mixed(samples=m, seed=3))
        errs.append(abs(pv.re - tr.real))
        ses.append(pv.stderr_re)
        assert errs[-1] <= 5 * pv.stderr_re + 1e-12
    assert ses[0] / ses[2] == pytest.approx(16, rel=0.3)


def test_full_average_cap():
    with pytest.raises(SizeCapError):
        probe_expectations_exact(Circuit(4), SystemInput.maximally_mixed(), cap=3)


def test_system_input_validation():
    with pytest.raises(ValueError):
        SystemInput.basis(-1)
    with pytest.raises(ValueError):
        SystemInput.maximally_mixed(samples=0)
    with pytest.raises(ValueError):
        SystemInput.basis(4).statevector(2)
    with pytest.raises(ValueError):
        SystemInput.maximally_mixed().statevector(2)


def test_probe_spec_validation():
    for alpha in (0.0, -0.1, 1.1, math.nan):
        with pytest.raises(ValueError):
            ProbeSpec(alpha=alpha)
    with pytest.raises(ValueError):
        ProbeSpec(readout="X")


def test_estimate_identity_exact():
    est = estimate_trace(ID1, SystemInput.basis(0), ProbeSpec(), 1000, 5)
    assert est.mean_re == 1.0 and est.stderr_re == 0.0
    assert abs(est.mean_im) <= 4 * est.stderr_im
    assert est.shots == 1000 and est.seed == 5
    assert "im=-<Y_probe>" in est.convention_note


def test_estimate_sigma_x_within_four_over_root_shots():
    shots = 10 ** 4
    hits = sum(abs(estimate_trace(SIGMA_X, SystemInput.maximally_mixed(), ProbeSpec(readout="Z"), shots, s).mean_re)
               <= 4 / math.sqrt(shots) for s in range(100))
    assert hits >= 99


def test_alpha_half_reports_one():
    probe = ProbeSpec(alpha=0.5, readout="Z")
    assert outcome_probability(1.0, 0.5) == 0.75
    est = estimate_trace(Circuit(1, [Gate("DENSE1Q", (0,), matrix=np.eye(2))]), SystemInput.maximally_mixed(),
                         probe, 400_000, 1)
    # raw probe mean is about 0.5 before the division by alpha
    assert est.mean_re * 0.5 == pytest.approx(0.5, abs=4 * est.stderr_re * 0.5)
    assert est.mean_re == pytest.approx(1.0, abs=4 * est.stderr_re)


def test_shots_must_be_positive():
    with pytest.raises(ValueError):
        estimate_trace(ID1, SystemInput.basis(0), ProbeSpec(), 0, 1)


@pytest.mark.parametrize("eps,pe,alpha,expected", [
    (0.1, math.exp(-1), 1.0, 100),
    (0.1, math.exp(-1), 0.5, 400),
    (0.01, math.exp(-2), 1.0, 20000),
])
def test_required_shots(eps, pe, alpha, expected):
    assert required_shots(eps, pe, alpha) == expected


def test_required_shots_rounds_up():
    assert required_shots(0.3, math.exp(-1)) == 12


@pytest.mark.parametrize("args", [(0, 0.1, 1), (-1, 0.1, 1), (0.1, 0, 1), (0.1, 1, 1), (0.1, 0.1, 0), (0.1, 0.1, 1.5)])
def test_required_shots_domain(args):
    with pytest.raises(ValueError):
        required_shots(*args)


@settings(max_examples=80, deadline=None)
@given(value=st.floats(-1, 1), alpha=st.floats(1e-3, 1))
def test_outcome_probabilities_sum_to_one(value, alpha):
    p0 = outcome_probability(value, alpha)
    p1 = outcome_probability(-value, alpha)
    assert 0 <= p0 <= 1
    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-1, 1), im=st.floats(-1, 1), shots=st.integers(1, 5000), seed=st.integers(0, 2 ** 31))
def test_estimate_bounds(re, im, shots, seed):
    est = sample_probe(re, im, ProbeSpec(), shots, seed)
    assert abs(est.mean_re) <= 1 + 3 * est.stderr_re + 1e-12
    assert abs(est.mean_im) <= 1 + 3 * est.stderr_im + 1e-12


def test_consistency_million_shots():
    re, im = 0.31, -0.62
    good = 0
    for s in range(100):
        est = sample_probe(re, im, ProbeSpec(), 10 ** 6, s)
        good += abs(est.mean_re - re) <= 5 * est.stderr_re and abs(est.mean_im - im) <= 5 * est.stderr_im
    assert good >= 99


def test_stderr_formula():
    est = sample_probe(0.2, 0.0, ProbeSpec(readout="Z"), 10_000, 4)
    m = est.mean_re
    assert est.stderr_re == pytest.approx(math.sqrt((1 - m * m) * 10_000 / 9_999 / 10_000), rel=1e-12)


def test_readout_selection():
    est = sample_probe(0.2, 0.3, ProbeSpec(readout="Z"), 100, 1)
    assert math.isnan(est.mean_im) and not math.isnan(est.mean_re)
    est = sample_probe(0.2, 0.3, ProbeSpec(readout="Y"), 100, 1)
    assert math.isnan(est.mean_re) and not math.isnan(est.mean_im)


def test_worker_count_independence():
    a = sample_probe(0.1, 0.2, ProbeSpec(alpha=0.7), 300_001, 9, workers=1)
    for w in (2, 4, 8):
        assert sample_probe(0.1, 0.2, ProbeSpec(alpha=0.7), 300_001, 9, workers=w) == a
    assert count_plus(0.3, 200_000, 4, 0, 1) == count_plus(0.3, 200_000, 4, 0, 3)


def test_mixed_average_worker_independence(rng):
    circ = random_circuit(5, 30, rng)
    ref = probe_expectations_exact(circ, SystemInput.maximally_mixed(), workers=1)
    assert probe_expectations_exact(circ, SystemInput.maximally_mixed(), workers=4) == ref


def test_seed_reproducible_and_sensitive():
    a = sample_probe(0.1, 0.2, ProbeSpec(), 5000, 1)
    assert sample_probe(0.1, 0.2, ProbeSpec(), 5000, 1) == a
    assert sample_probe(0.1, 0.2, ProbeSpec(), 5000, 2) != a


def test_analytic_alpha_matches_probe_ensemble(rng):
    # probe rho = alpha|0><0| + (1-alpha)I/2: a probe started in |1> reads <Z> = -Re<U>
    circ = random_circuit(3, 25, rng)
    u = embed_circuit(circ)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    sc = build_scattering_circuit(circ)
    zs = []
    for probe_bit in (0, 1):
        amps = np.zeros(16, dtype=complex)
        amps[probe_bit * 8:(probe_bit + 1) * 8] = psi
        zs.append(expectation_pauli(apply_circuit(StateVector(4, amps), sc), "Z", 3))
    re = np.vdot(psi, u @ psi).real
    assert zs[1] == pytest.approx(-re, abs=1e-12)
    for alpha in (1.0, 0.6, 0.25):
        w0 = alpha + (1 - alpha) / 2
        ensemble = w0 * zs[0] + (1 - w0) * zs[1]
        assert 2 * outcome_probability(re, alpha) - 1 == pytest.approx(ensemble, abs=1e-12)


def test_estimate_result_to_dict():
    d = sample_probe(0.0, 0.0, ProbeSpec(), 10, 3).to_dict()
    assert set(d) >= {"mean_re", "mean_im", "stderr_re", "stderr_im", "shots", "seed", "convention_note"}
