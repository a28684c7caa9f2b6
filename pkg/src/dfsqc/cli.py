"""Config-driven desk experiments.

Usage::

    dfsqc <subcommand> --config run.json [--seed N] [--out path] [--format csv|json]

Parameters are in angular-frequency units with hbar = 1 unless a config sets
``hbar``. Exit codes: 0 success, 2 bad config, 3 a truncation or step-size
convergence check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .dfs import collective_dephasing, encode
from .hamiltonians import Axis, collective_coupling_hamiltonian, geometric_phase_unitary
from .paritymeter import Kind, MeterConfig, PAIR_LAYOUT, meter_projectors, switching_decision
from .protocol import BASIS_INPUTS, Inputs, average_fidelity, process_fidelity, run_cnot
from .qcore import KET0, KET1, KET_MINUS, KET_PLUS, StateVector, propagate_timedep

CONVERGENCE_TOL = 1e-8


class ConfigError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict[str, Any]
    seed: int
    n_max: int = 20
    output_path: str | None = None
    output_format: str = "csv"

    def resolved(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "parameters": self.parameters,
            "seed": self.seed,
            "n_max": self.n_max,
            "output_path": self.output_path,
            "output_format": self.output_format,
        }


# ---- parameter schemas -----------------------------------------------------


def _float(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"parameter {name!r} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"parameter {name!r} must be finite")
    return float(v)


def _positive(name, v):
    v = _float(name, v)
    if v <= 0:
        raise ConfigError(f"parameter {name!r} must be positive, got {v}")
    return v


def _nonneg(name, v):
    v = _float(name, v)
    if v < 0:
        raise ConfigError(f"parameter {name!r} must be non-negative, got {v}")
    return v


def _int(minimum):
    def check(name, v):
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            raise ConfigError(f"parameter {name!r} must be an integer >= {minimum}, got {v!r}")
        return v

    return check


def _list_of(item):
    def check(name, v):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"parameter {name!r} must be a non-empty list")
        return [item(f"{name}[{k}]", x) for k, x in enumerate(v)]

    return check


def _choice(*options):
    def check(name, v):
        if v not in options:
            raise ConfigError(f"parameter {name!r} must be one of {options}, got {v!r}")
        return v

    return check


def _bool(name, v):
    if not isinstance(v, bool):
        raise ConfigError(f"parameter {name!r} must be true or false")
    return v


def _complex(name, v):
    try:
        if isinstance(v, list) and len(v) == 2:
            return complex(_float(name, v[0]), _float(name, v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(_float(name, v))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"parameter {name!r} is not a complex number: {v!r}") from exc


def _optional(check):
    def wrapped(name, v):
        return None if v is None else check(name, v)

    return wrapped


Schema = dict[str, tuple[Callable, Any]]

SCHEMAS: dict[str, Schema] = {
    "effective-vs-exact": {
        "g": (_nonneg, 0.05),
        "e_j": (_positive, 1.0),
        "hbar": (_positive, 1.0),
        "n_devices": (_int(1), 2),
        "deltas": (_list_of(_positive), [0.5, 1.0]),
        "delta_t_over_2pi": (_list_of(_positive), [0.25, 0.5, 1.0]),
        "steps_per_period": (_int(1), 400),
        "n_states": (_int(1), 10),
    },
    "dfs-dephasing": {
        "ensemble_sizes": (_list_of(_int(1)), [1, 1000]),
        "kinds": (_list_of(_choice("encoded", "bare_bell", "bare_plus")), ["encoded", "bare_bell", "bare_plus"]),
    },
    "cnot": {
        "preset": (_optional(_choice("generic", *BASIS_INPUTS)), "generic"),
        "alpha": (_optional(_complex), None),
        "zeta": (_optional(_complex), None),
        "xi": (_optional(_complex), None),
        "tau": (_optional(_complex), None),
        "meter_mode": (_choice("ideal", "physical"), "ideal"),
        "execution": (_choice("enumerate", "sampled"), "enumerate"),
        "n_random": (_int(0), 20),
    },
    "parity-demo": {
        "i1": (_positive, 1.0),
        "i2": (_positive, 1.0),
        "ic": (_positive, 10.0),
        "armed": (_bool, True),
        "disarmed": (_bool, False),
    },
}

GENERIC_INPUTS = Inputs(0.6, 0.8j, np.sqrt(0.3), -np.sqrt(0.7) * np.exp(0.4j))


def validate(cfg: dict[str, Any], experiment: str) -> ExperimentConfig:
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    known = {"experiment", "parameters", "seed", "n_max", "output_path", "output_format"}
    for key in cfg:
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")
    if cfg.get("experiment", experiment) != experiment:
        raise ConfigError(f"field 'experiment' is {cfg['experiment']!r} but subcommand is {experiment!r}")
    seed = cfg.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("field 'seed' must be a non-negative integer (it is mandatory)")
    n_max = cfg.get("n_max", 20)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ConfigError("field 'n_max' must be an integer >= 1")
    fmt = cfg.get("output_format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("field 'output_format' must be 'csv' or 'json'")
    out = cfg.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("field 'output_path' must be a string")
    raw = cfg.get("parameters", {}) or {}
    if not isinstance(raw, dict):
        raise ConfigError("field 'parameters' must be a mapping")
    schema = SCHEMAS[experiment]
    for name in raw:
        if name not in schema:
            raise ConfigError(f"unknown parameter {name!r} for {experiment}")
    params = {}
    for name, (check, default) in schema.items():
        params[name] = check(name, raw[name]) if name in raw else default
    _cross_check(experiment, params)
    return ExperimentConfig(experiment, params, seed, n_max, out, fmt)


def _cross_check(experiment: str, p: dict[str, Any]) -> None:
    if experiment == "cnot":
        given = [k for k in ("alpha", "zeta", "xi", "tau") if p[k] is not None]
        if given and len(given) != 4:
            raise ConfigError("parameters 'alpha', 'zeta', 'xi', 'tau' must be given together")
        if given:
            for a, b in (("alpha", "zeta"), ("xi", "tau")):
                if abs(abs(p[a]) ** 2 + abs(p[b]) ** 2 - 1) > 1e-12:
                    raise ConfigError(f"parameters {a!r} and {b!r} are not normalized")
    if experiment == "parity-demo":
        if p["armed"] and p["disarmed"]:
            raise ConfigError("parameters 'armed' and 'disarmed' cannot both be true")
        cfg = MeterConfig(p["i1"], p["i2"], p["ic"])
        if cfg.armed_bias <= 0:
            raise ConfigError("parameter 'ic' too small: armed bias ic - (i1 + i2)/2 must be positive")
        if p["armed"] and not cfg.selective:
            raise ConfigError("parameters 'i1', 'i2' do not give a parity-selective meter")
        if p["disarmed"] and p["i1"] + p["i2"] >= p["ic"]:
            raise ConfigError("parameter 'ic' must exceed i1 + i2 for a disarmed meter")


# ---- experiments -------------------------------------------------------------


def _random_device_states(n_devices: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    d = 2**n_devices
    v = rng.normal(size=(count, d)) + 1j * rng.normal(size=(count, d))
    return list(v / np.linalg.norm(v, axis=1, keepdims=True))


def _geometric_scores(u: np.ndarray, target: np.ndarray, states, n_max: int) -> tuple[float, float]:
    d = target.shape[0]
    block = u.reshape(d, n_max + 1, d, n_max + 1)[:, :, :, 0]  # input cavity in vacuum
    overlaps, returns = [], []
    for psi in states:
        out = np.einsum("inj,j->in", block, psi)
        want = target @ psi
        overlaps.append(abs(np.vdot(want, out[:, 0])))
        returns.append(float(np.vdot(out[:, 0], out[:, 0]).real))
    return float(np.mean(overlaps)), float(np.mean(returns))


def _evolve_geometric(n, beta, delta, t, n_max, steps, hbar):
    # the coupling is linear in exp(-+i delta t): H(t) = cos(delta t) H(0) + sin(delta t) H(pi / 2 delta)
    h0 = collective_coupling_hamiltonian(Axis.X, n, beta, delta, 0.0, n_max, hbar).matrix
    h1 = collective_coupling_hamiltonian(Axis.X, n, beta, delta, 0.5 * np.pi / delta, n_max, hbar).matrix
    u = propagate_timedep(lambda s: np.cos(delta * s) * h0 + np.sin(delta * s) * h1, 0.0, t, steps, hbar, order=4)
    return u.matrix


def run_effective_vs_exact(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    p = cfg.parameters
    beta = p["g"] * p["e_j"] / p["hbar"]
    n = p["n_devices"]
    rows = []
    for delta in p["deltas"]:
        chi = beta**2 / delta
        for frac in p["delta_t_over_2pi"]:
            t = frac * 2 * np.pi / delta
            steps = max(1, int(math.ceil(p["steps_per_period"] * frac)))
            states = _random_device_states(n, p["n_states"], np.random.default_rng([cfg.seed, len(rows)]))
            target = geometric_phase_unitary(Axis.X, n, chi, t).matrix
            results = {}
            runs = (("base", cfg.n_max, steps), ("trunc", cfg.n_max + 10, steps), ("steps", cfg.n_max, 2 * steps))
            for key, n_max, k in runs:
                u = _evolve_geometric(n, beta, delta, t, n_max, k, p["hbar"])
                results[key] = _geometric_scores(u, target, states, n_max)
            base = results["base"]
            for key in ("trunc", "steps"):
                change = max(abs(a - b) for a, b in zip(base, results[key]))
                if change > CONVERGENCE_TOL:
                    if key == "trunc":
                        what = f"n_max {cfg.n_max} -> {cfg.n_max + 10}"
                    else:
                        what = f"steps {steps} -> {2 * steps}"
                    raise ConvergenceError(
                        f"overlap moved by {change:.3g} when increasing {what} at delta={delta}, delta_t/2pi={frac}"
                    )
            rows.append(
                {
                    "delta_over_beta": delta / beta if beta > 0 else math.inf,
                    "delta_t_over_2pi": frac,
                    "n_max": cfg.n_max,
                    "overlap_with_effective": base[0],
                    "cavity_factorization_overlap": base[1],
                }
            )
    return rows


def dephasing_coherence(kind: str, size: int, rng: np.random.Generator) -> float:
    """Modulus of the relevant off-diagonal element after averaging random collective phases."""
    if kind == "encoded":
        psi, n, (i, j) = encode(1 / np.sqrt(2), 1 / np.sqrt(2)).amplitudes, 2, (1, 2)
    elif kind == "bare_bell":
        psi, n, (i, j) = (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / np.sqrt(2), 2, (0, 3)
    elif kind == "bare_plus":
        psi, n, (i, j) = KET_PLUS, 1, (0, 1)
    else:
        raise ConfigError(f"unknown state kind {kind!r}")
    rho = np.zeros((len(psi), len(psi)), dtype=complex)
    phis = [0.0] if size == 1 else rng.uniform(0, 2 * np.pi, size)
    for phi in phis:
        out = collective_dephasing(phi, n).matrix @ psi
        rho += np.outer(out, out.conj())
    rho /= len(phis)
    return float(abs(rho[i, j]))


def run_dfs_dephasing(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    rows = []
    for kind in cfg.parameters["kinds"]:
        for size in cfg.parameters["ensemble_sizes"]:
            rng = np.random.default_rng([cfg.seed, len(rows)])
            coherence = dephasing_coherence(kind, size, rng)
            rows.append({"state_kind": kind, "ensemble_size": size, "residual_coherence": coherence})
    return rows


def _cnot_inputs(p: dict[str, Any]) -> Inputs:
    if p["alpha"] is not None:
        return Inputs(p["alpha"], p["zeta"], p["xi"], p["tau"])
    if p["preset"] in (None, "generic"):
        return GENERIC_INPUTS
    return BASIS_INPUTS[p["preset"]]


def run_cnot_report(cfg: ExperimentConfig) -> dict[str, Any]:
    p = cfg.parameters
    inputs = _cnot_inputs(p)
    rng = np.random.default_rng(cfg.seed) if p["execution"] == "sampled" else None
    records = run_cnot(inputs.control, inputs.target, p["meter_mode"], p["execution"], rng=rng)
    branches = [
        {
            "p1": r.p1,
            "p2": r.p2,
            "m": r.m,
            "p1_kind": r.p1_kind.value,
            "p2_kind": r.p2_kind.value,
            "probability": r.probability,
            "fidelity_to_ideal_cnot": r.fidelity,
            "correction_c": r.correction_c,
            "correction_t": r.correction_t,
        }
        for r in records
    ]
    summary = {
        "input_fidelity": average_fidelity(records) if p["execution"] == "enumerate" else records[0].fidelity,
        "process_fidelity": process_fidelity(p["meter_mode"], p["n_random"], cfg.seed),
        "n_branches": len(records),
        "collapsed_branches": sum(1 for r in records if r.fidelity < 1 - 1e-9),
    }
    return {"branches": branches, "summary": summary}


DEMO_STATES = {
    "++": np.kron(KET_PLUS, KET_PLUS),
    "+-": np.kron(KET_PLUS, KET_MINUS),
    "-+": np.kron(KET_MINUS, KET_PLUS),
    "--": np.kron(KET_MINUS, KET_MINUS),
    "(+- + -+)/sqrt2": (np.kron(KET_PLUS, KET_MINUS) + np.kron(KET_MINUS, KET_PLUS)) / np.sqrt(2),
    "(++ + --)/sqrt2": (np.kron(KET_PLUS, KET_PLUS) + np.kron(KET_MINUS, KET_MINUS)) / np.sqrt(2),
}


def run_parity_demo(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    p = cfg.parameters
    armed = p["armed"] and not p["disarmed"]
    meter = MeterConfig(p["i1"], p["i2"], p["ic"], basis="PLUSMINUS")
    if not armed:
        meter = MeterConfig.disarmed_config(p["i1"], p["i2"], p["ic"], basis="PLUSMINUS")
    projs = meter_projectors(MeterConfig(p["i1"], p["i2"], p["ic"], basis="PLUSMINUS"))
    rows = []
    for name, ket in DEMO_STATES.items():
        i_f, s_f = switching_decision(ket, meter)
        i_r, s_r = switching_decision(ket, meter, reverse=True)
        if s_f:
            outcome = Kind.EVEN_PP.value
        elif s_r:
            outcome = Kind.EVEN_MM.value
        else:
            outcome = Kind.ODD.value if armed else "NONE"
        state = StateVector(PAIR_LAYOUT, ket)
        row = {
            "state": name,
            "I0_forward": i_f,
            "switched_forward": s_f,
            "I0_reversed": i_r,
            "switched_reversed": s_r,
            "inferred_outcome": outcome,
        }
        for kind in (Kind.EVEN_PP, Kind.EVEN_MM, Kind.ODD):
            row[f"p_{kind.value.lower()}"] = state.expectation(projs[kind]).real if armed else 0.0
        rows.append(row)
    return rows


RUNNERS = {
    "effective-vs-exact": run_effective_vs_exact,
    "dfs-dephasing": run_dfs_dephasing,
    "cnot": run_cnot_report,
    "parity-demo": run_parity_demo,
}


# ---- output ----------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render(cfg: ExperimentConfig, result) -> str:
    header = {"tool": "dfsqc", "version": __version__, "config": _jsonable(cfg.resolved())}
    if cfg.output_format == "json":
        body = dict(header)
        if isinstance(result, dict):
            body.update(_jsonable(result))
        else:
            body["rows"] = _jsonable(result)
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    rows = result["branches"] if isinstance(result, dict) else result
    buf = io.StringIO()
    buf.write(f"# dfsqc {__version__}\n")
    buf.write("# config: " + json.dumps(header["config"], sort_keys=True) + "\n")
    if isinstance(result, dict) and "summary" in result:
        buf.write("# summary: " + json.dumps(_jsonable(result["summary"]), sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(v) for k, v in row.items()})
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfsqc",
        description="Desk experiments for DFS-encoded charge devices in a cavity. "
        "Rates and energies are angular-frequency units; hbar = 1 unless the config sets it.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    helps = {
        "effective-vs-exact": "propagate the collective cavity coupling and compare with exp(-i chi t J_x^2)",
        "dfs-dephasing": "residual coherence under random collective dephasing",
        "cnot": "measurement-based CNOT branch report",
        "parity-demo": "switching-current readout of the sigma_x product states",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", help="output file (default: config output_path, else stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="overrides the config output_format")
    return parser


def load_config(args) -> ExperimentConfig:
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {str(args.config)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["output_path"] = args.out
    if args.format is not None:
        raw["output_format"] = args.format
    return validate(raw, args.experiment)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"dfsqc: config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = RUNNERS[cfg.experiment](cfg)
    except ConvergenceError as exc:
        print(f"dfsqc: convergence check failed: {exc}", file=sys.stderr)
        return 3
    text = render(cfg, result)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
