"""Command-line front end.

Every output starts with a metadata line carrying the resolved configuration
(``# meta: {...}`` for CSV, ``{"meta": {...}}`` for json-lines), followed by
a fixed set of columns per subcommand:

  trace          circuit,n_qubits,input,re_exact,im_exact,mean_re,mean_im,stderr_re,stderr_im,shots,seed,alpha
  otoc           tau,re,im,c,stderr_re,stderr_im,re_exact,im_exact,c_exact,shots,seed,input,
                 sign_convention,gate_order,method,alpha
  lightcone      d,tau,c,arrival_flag      (+ arrivals table: d,v_site,arrival_time)
  spectrum       u,f,n2,kernel             (+ peaks table: u,phase,weight,centroid)
  shots-scaling  alpha,shots,reps,mean_re,empirical_stderr,reported_stderr,predicted_stderr,
                 reported_var_ratio,empirical_var_ratio   (+ fit table: alpha,slope_empirical,slope_reported)

Secondary tables go to ``<output stem>.<table><suffix>`` next to ``--output``,
or follow the main table on standard output after a ``# table: <name>`` line.
Qubit 0 is the least significant bit of every basis index.

Exit codes: 1 invalid configuration, 2 size cap exceeded, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .dqc1 import ProbeSpec, SystemInput, parallel_map, probe_expectations_exact, sample_probe
from .errors import ConfigError, SizeCapError
from .models import PRESETS, EvolutionSpec, IsingChainSpec, LocalPauli, build_evolution_circuit, preset
from .otoc import OtocSpec, build_otoc_system_circuit, lightcone_sweep, otoc_expectation, point_seed
from .qsim import Circuit, Gate, StateVector, random_circuit
from .spectral import SpectralSpec, eigenphase_peaks, estimate_spectral_density

log = logging.getLogger("dqc1otoc")

COLUMNS = {
    "trace": ["circuit", "n_qubits", "input", "re_exact", "im_exact", "mean_re", "mean_im",
              "stderr_re", "stderr_im", "shots", "seed", "alpha"],
    "otoc": ["tau", "re", "im", "c", "stderr_re", "stderr_im", "re_exact", "im_exact", "c_exact",
             "shots", "seed", "input", "sign_convention", "gate_order", "method", "alpha"],
    "lightcone": ["d", "tau", "c", "arrival_flag"],
    "spectrum": ["u", "f", "n2", "kernel"],
    "shots-scaling": ["alpha", "shots", "reps", "mean_re", "empirical_stderr", "reported_stderr",
                      "predicted_stderr", "reported_var_ratio", "empirical_var_ratio"],
}
SECONDARY = {
    "lightcone": ("arrivals", ["d", "v_site", "arrival_time"]),
    "spectrum": ("peaks", ["u", "phase", "weight", "centroid"]),
    "shots-scaling": ("fit", ["alpha", "slope_empirical", "slope_reported"]),
}

# keys that change how results are produced or stored, never what they are
EXECUTION_KEYS = {"workers", "output", "config", "verbose"}


def _floats(text) -> list[float]:
    """Parse ``a,b,c`` or ``start:stop:step`` (stop inclusive)."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def _local(text) -> LocalPauli:
    text = str(text).strip()
    return LocalPauli(int(text[1:]), text[0])


# name -> (converter, default); the same converters validate config-file values
OPTIONS = {
    "model": (str, "chaotic-default"),
    "n_sites": (int, 4),
    "J": (float, None),
    "h_x": (float, None),
    "h_z": (float, None),
    "boundary": (str, "open"),
    "method": (str, "exact"),
    "steps": (int, 10),
    "sign": (str, "minus"),
    "gate_order": (str, "corrected"),
    "w": (str, "Z0"),
    "v": (str, None),
    "input": (str, "mixed"),
    "input_seed": (int, 0),
    "shots": (int, 0),
    "seed": (int, 0),
    "alpha": (float, 1.0),
    "tau": (float, 1.0),
    "taus": (str, "0:2:0.25"),
    "circuit": (str, "random"),
    "n_qubits": (int, 3),
    "depth": (int, 20),
    "circuit_seed": (int, 0),
    "theta": (float, math.pi / 3),
    "threshold": (float, 0.05),
    "v_axis": (str, "Z"),
    "backend": (str, "oracle"),
    "n2": (int, 6),
    "kernel": (str, "standard_2pi"),
    "path": (str, "oracle"),
    "min_weight": (float, 0.05),
    "shots_list": (str, "100,1000,10000,100000"),
    "alphas": (str, "1.0,0.5"),
    "reps": (int, 100),
    "format": (str, "csv"),
    "output": (str, None),
    "workers": (int, 1),
}

HELP = {
    "model": f"model preset: {', '.join(sorted(PRESETS))}",
    "n_sites": "chain length",
    "J": "override ZZ coupling", "h_x": "override transverse field", "h_z": "override longitudinal field",
    "boundary": "open or periodic",
    "method": "evolution method: exact, trotter1, trotter2",
    "steps": "Trotter steps",
    "sign": "minus for U=exp(-iHt), plus for U=exp(+iHt)",
    "gate_order": "corrected (W(t)^dag V^dag W(t) V) or literal (printed figure order)",
    "w": "W operator as <axis><site>, e.g. Z0",
    "v": "V operator as <axis><site>; defaults to Z on the last site",
    "input": "system input: mixed, mixed:<samples>, basis:<index>, plus",
    "input_seed": "seed for sampled mixed inputs",
    "shots": "probe shots per readout basis (0 = exact only)",
    "seed": "run seed",
    "alpha": "probe purity in (0, 1]",
    "tau": "evolution time for trace",
    "taus": "time grid, a,b,c or start:stop:step",
    "circuit": "trace circuit: identity, x, phase, random, evolution, otoc",
    "n_qubits": "qubit count for identity/x/phase/random circuits",
    "depth": "random circuit depth", "circuit_seed": "random circuit seed",
    "theta": "angle for the phase circuit",
    "threshold": "C threshold for arrival times",
    "v_axis": "Pauli axis of V in the light-cone sweep",
    "backend": "light-cone exact values from the oracle or the circuit",
    "n2": "Fourier register qubits", "kernel": "standard_2pi or paper_4pi",
    "path": "spectral traces from oracle or circuit",
    "min_weight": "minimum peak weight",
    "shots_list": "shot counts for shots-scaling", "alphas": "probe purities for shots-scaling",
    "reps": "seeded repetitions per shots-scaling cell",
    "format": "csv or jsonl", "output": "output file (default standard output)",
    "workers": "worker threads (never changes results)",
}

COMMAND_OPTIONS = {
    "trace": ["circuit", "n_qubits", "depth", "circuit_seed", "theta", "tau", "input", "input_seed",
              "shots", "seed", "alpha"],
    "otoc": ["taus", "input", "input_seed", "shots", "seed", "alpha"],
    "lightcone": ["taus", "input", "input_seed", "shots", "seed", "alpha", "threshold", "v_axis", "backend"],
    "spectrum": ["tau", "input", "input_seed", "n2", "kernel", "path", "min_weight"],
    "shots-scaling": ["circuit", "n_qubits", "depth", "circuit_seed", "theta", "tau", "input",
                      "input_seed", "seed", "shots_list", "alphas", "reps"],
}
MODEL_OPTIONS = ["model", "n_sites", "J", "h_x", "h_z", "boundary", "method", "steps", "sign",
                 "gate_order", "w", "v"]
COMMON = ["format", "output", "workers"]


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; argparse would exit 2, which is reserved for size caps
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="dqc1otoc", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in COMMAND_OPTIONS.items():
        p = sub.add_parser(command, help=f"run {command}", description=f"columns: {','.join(COLUMNS[command])}",
                           allow_abbrev=False)
        p.add_argument("--config", help="YAML/JSON file of flat key: value settings (flags override)")
        p.add_argument("-v", "--verbose", action="store_true")
        for name in MODEL_OPTIONS + opts + COMMON:
            conv, default = OPTIONS[name]
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, dest=name, type=conv, default=None,
                           help=f"{HELP[name]} (default: {default})")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    allowed = MODEL_OPTIONS + COMMAND_OPTIONS[args.command] + COMMON
    cfg = {k: OPTIONS[k][1] for k in allowed}
    if args.config:
        text = Path(args.config).read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat mapping")
        for key, value in data.items():
            key = str(key).replace("-", "_")
            if key == "command":
                continue
            if key not in allowed:
                raise ConfigError(f"unknown config key {key!r} for {args.command}")
            if isinstance(value, (dict, list)) and key not in ("taus", "shots_list", "alphas"):
                raise ConfigError(f"config key {key!r} must be a scalar")
            try:
                cfg[key] = value if isinstance(value, list) else OPTIONS[key][0](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    for key in allowed:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    return cfg


def parse_input(text: str, seed: int) -> SystemInput:
    text = text.strip()
    if text == "mixed":
        return SystemInput.maximally_mixed()
    if text.startswith("mixed:"):
        return SystemInput.maximally_mixed(samples=int(text.split(":", 1)[1]), seed=seed)
    if text.startswith("basis:"):
        return SystemInput.basis(int(text.split(":", 1)[1]))
    raise ConfigError(f"unknown input {text!r}")


def make_input(cfg: dict, n: int) -> SystemInput:
    text = str(cfg["input"]).strip()
    if text == "plus":
        return SystemInput.pure(StateVector(n, np.full(2 ** n, 2 ** (-n / 2), dtype=complex)))
    inp = parse_input(text, cfg["input_seed"])
    if inp.kind == "basis" and inp.index >= 2 ** n:
        raise ConfigError(f"basis index {inp.index} out of range for {n} qubits")
    return inp


def make_model(cfg: dict) -> IsingChainSpec:
    model = preset(cfg["model"], cfg["n_sites"], cfg["boundary"])
    overrides = {k: cfg[k] for k in ("J", "h_x", "h_z") if cfg.get(k) is not None}
    return replace(model, **overrides) if overrides else model


def make_otoc(cfg: dict, tau: float) -> OtocSpec:
    model = make_model(cfg)
    evo = EvolutionSpec(tau, cfg["method"], cfg["steps"], cfg["sign"])
    v = cfg["v"] or f"Z{model.n_sites - 1}"
    return OtocSpec(model, evo, _local(cfg["w"]), _local(v), make_input(cfg, model.n_sites), cfg["gate_order"])


def named_circuit(cfg: dict) -> tuple[Circuit, int]:
    name, n = cfg["circuit"], cfg["n_qubits"]
    if name == "identity":
        return Circuit(n), n
    if name == "x":
        return Circuit(n, [Gate("X", (0,))]), n
    if name == "phase":
        return Circuit(n, [Gate("PHASE", (0,), theta=cfg["theta"])]), n
    if name == "random":
        return random_circuit(n, cfg["depth"], np.random.default_rng(cfg["circuit_seed"])), n
    if name == "evolution":
        model = make_model(cfg)
        evo = EvolutionSpec(cfg["tau"], cfg["method"], cfg["steps"], cfg["sign"])
        return build_evolution_circuit(model, evo), model.n_sites
    if name == "otoc":
        spec = make_otoc(cfg, cfg["tau"])
        return build_otoc_system_circuit(spec), spec.model.n_sites
    raise ConfigError(f"unknown circuit {name!r}")


def _probe(cfg: dict) -> ProbeSpec:
    return ProbeSpec(alpha=cfg["alpha"])


def run_trace(cfg: dict):
    circ, n = named_circuit(cfg)
    inp = make_input(cfg, n)
    re, im = probe_expectations_exact(circ, inp, cfg["workers"])
    row = dict(circuit=cfg["circuit"], n_qubits=n, input=inp.describe(), re_exact=re, im_exact=im,
               mean_re=re, mean_im=im, stderr_re=0.0, stderr_im=0.0, shots=0, seed=cfg["seed"],
               alpha=cfg["alpha"])
    if cfg["shots"] > 0:
        est = sample_probe(re, im, _probe(cfg), cfg["shots"], cfg["seed"], cfg["workers"])
        row.update(mean_re=est.mean_re, mean_im=est.mean_im, stderr_re=est.stderr_re,
                   stderr_im=est.stderr_im, shots=est.shots)
    return [row], None


def run_otoc(cfg: dict):
    taus = _floats(cfg["taus"])
    if not taus:
        raise ConfigError("empty tau grid")
    specs = [make_otoc(cfg, t) for t in taus]
    exact = parallel_map(otoc_expectation, specs, cfg["workers"])
    rows = []
    for ti, (spec, (re, im)) in enumerate(zip(specs, exact)):
        row = dict(tau=taus[ti], re=re, im=im, c=1.0 - re, stderr_re=0.0, stderr_im=0.0,
                   re_exact=re, im_exact=im, c_exact=1.0 - re, shots=0, seed=cfg["seed"],
                   input=spec.input.describe(), sign_convention=spec.evolution.sign_label,
                   gate_order=spec.gate_order, method=spec.evolution.method, alpha=cfg["alpha"])
        if cfg["shots"] > 0:
            seed = point_seed(cfg["seed"], ti)
            est = sample_probe(re, im, _probe(cfg), cfg["shots"], seed, cfg["workers"])
            row.update(re=est.mean_re, im=est.mean_im, c=1.0 - est.mean_re, stderr_re=est.stderr_re,
                       stderr_im=est.stderr_im, shots=est.shots, seed=seed)
        rows.append(row)
    return rows, None


def run_lightcone(cfg: dict):
    spec = make_otoc(cfg, 0.0)
    result = lightcone_sweep(
        spec.model, spec.evolution, _floats(cfg["taus"]), spec.w, cfg["v_axis"], spec.input,
        shots=cfg["shots"] or None, seed=cfg["seed"], probe=_probe(cfg), threshold=cfg["threshold"],
        backend=cfg["backend"], workers=cfg["workers"])
    rows = [dict(d=p.d, tau=p.tau, c=p.c, arrival_flag=int(p.arrival_flag)) for p in result.points]
    arrivals = [dict(d=abs(site - spec.w.site), v_site=site, arrival_time="" if t is None else t)
                for site, t in sorted(result.arrival_times.items())]
    return rows, arrivals


def run_spectrum(cfg: dict):
    spec = SpectralSpec(make_otoc(cfg, cfg["tau"]), cfg["n2"], cfg["kernel"])
    result = estimate_spectral_density(spec, cfg["path"], cfg["workers"])
    log.info("normalization residual %.3g, imaginary residual %.3g",
             result.normalization_residual, result.imag_residual)
    rows = [dict(u=u, f=float(result.f[u]), n2=result.n2, kernel=result.convention)
            for u in range(result.n_bins)]
    peaks = [dict(u=p.u, phase=p.phase, weight=p.weight, centroid=p.centroid)
             for p in eigenphase_peaks(result, cfg["min_weight"])]
    return rows, peaks


def _slope(x, y) -> float:
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def run_shots_scaling(cfg: dict):
    circ, n = named_circuit(cfg)
    inp = make_input(cfg, n)
    re, im = probe_expectations_exact(circ, inp, cfg["workers"])
    shots_list, alphas, reps = _ints(cfg["shots_list"]), _floats(cfg["alphas"]), cfg["reps"]
    if reps < 2 or not shots_list or not alphas:
        raise ConfigError("shots-scaling needs reps >= 2 and non-empty shots/alpha lists")
    cells = {}
    for ai, alpha in enumerate(alphas):
        probe = ProbeSpec(alpha=alpha, readout="Z")
        for li, shots in enumerate(shots_list):
            ests = parallel_map(
                lambda r: sample_probe(re, im, probe, shots, point_seed(cfg["seed"], ai, li, r)),
                list(range(reps)), cfg["workers"])
            means = np.array([e.mean_re for e in ests])
            cells[ai, li] = (means, np.array([e.stderr_re for e in ests]))
    ref = alphas.index(1.0) if 1.0 in alphas else 0
    rows, fits = [], []
    for ai, alpha in enumerate(alphas):
        emp, rep = [], []
        for li, shots in enumerate(shots_list):
            means, ses = cells[ai, li]
            ref_means, ref_ses = cells[ref, li]
            e_se = float(np.std(means, ddof=1))
            r_se = float(np.mean(ses))
            emp.append(e_se)
            rep.append(r_se)
            rows.append(dict(
                alpha=alpha, shots=shots, reps=reps, mean_re=float(np.mean(means)),
                empirical_stderr=e_se, reported_stderr=r_se,
                predicted_stderr=math.sqrt(max(0.0, 1.0 - (alpha * re) ** 2) / shots) / alpha,
                reported_var_ratio=float(np.mean(ses ** 2) / np.mean(ref_ses ** 2)),
                empirical_var_ratio=float(np.var(means, ddof=1) / np.var(ref_means, ddof=1)),
            ))
        fits.append(dict(alpha=alpha, slope_empirical=_slope(shots_list, emp), slope_reported=_slope(shots_list, rep)))
    return rows, fits


RUNNERS = {"trace": run_trace, "otoc": run_otoc, "lightcone": run_lightcone,
           "spectrum": run_spectrum, "shots-scaling": run_shots_scaling}


def _cell(value):
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return value


def render_table(rows: list[dict], columns: list[str], fmt: str, meta: dict | None) -> str:
    buf = io.StringIO()
    if fmt == "jsonl":
        if meta is not None:
            buf.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for row in rows:
            buf.write(json.dumps({c: row[c] for c in columns}) + "\n")
        return buf.getvalue()
    if meta is not None:
        buf.write("# meta: " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def sidecar_path(output: Path, table: str) -> Path:
    return output.with_name(f"{output.stem}.{table}{output.suffix}")


def run(cfg: dict) -> int:
    """Execute a resolved config; returns the process exit status."""
    command = cfg["command"]
    fmt = cfg["format"]
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"format must be csv or jsonl, got {fmt!r}")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.get("shots", 0) < 0:
        raise ConfigError("shots must be >= 0")
    rows, extra = RUNNERS[command](cfg)
    meta = {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}
    meta["basis_order"] = "qubit 0 = least significant bit"
    main = render_table(rows, COLUMNS[command], fmt, meta)
    second = None
    if extra is not None:
        name, cols = SECONDARY[command]
        second = (name, render_table(extra, cols, fmt, None))
    if cfg["output"]:
        out = Path(cfg["output"])
        out.write_text(main)
        if second:
            sidecar_path(out, second[0]).write_text(second[1])
    else:
        sys.stdout.write(main)
        if second:
            sys.stdout.write(f"# table: {second[0]}\n" + second[1])
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        return run(cfg)
    except SizeCapError as exc:
        log.error("size cap exceeded: %s", exc)
        return 2
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return 3
    except (ConfigError, ValueError, KeyError) as exc:
        log.error("invalid configuration: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
