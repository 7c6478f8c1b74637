"""Declarative experiment runner: config file in, result bundle out.

A run directory contains

* ``metadata.json`` - config echo with every default filled in, seeds,
  library versions, wall time (the only place a timestamp appears),
* ``results.csv``   - one row per sample time, 17-significant-digit floats,
* ``summary.json``  - plateau/asymptotic coherence, fidelity and purity
  diagnostics, positivity floor,
* ``states.npz``    - full trajectories (needed by ``compare``).

Re-running a config with the same seed reproduces results.csv, summary.json
and states.npz byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .generator import PerturbativeGenerator, TimeGrid, Trajectory, asymptotic_state
from .models import (BoseHubbardModel, LatticeModel, ModelBundle, QubitModel,
                     build_bose_hubbard, build_lattice, build_qubit)
from .oracle import AveragedTrajectory, EnsembleSampler, average
from .states import fidelity, total_coherence

METHODS = ("master_equation", "monte_carlo", "both")
PLATEAU_SLOPE_TOL = 1e-4

_MODEL_DEFAULTS = {
    "qubit": {"center": 10.0, "sigma": 1.0, "alpha": 1.0},
    "lattice": {"dim": 30, "tilt_per_alpha": 10.0, "sigma_per_alpha": 1.0,
                "alpha": 1.0, "coupling": "x0"},
    "bose_hubbard": {"bosons": 3, "hopping": 1.0, "interaction": 1.0,
                     "tilt": 10.0, "sigma": 1.0, "alpha": 1.0},
}
_GRID_DEFAULTS = {
    "qubit": {"t_max": 5.0, "step": 0.01},
    "lattice": {"t_max": 4.0, "step": 0.01},
    "bose_hubbard": {"t_max": 30.0, "step": 0.02},
}
_RUN_DEFAULTS = {
    "method": "master_equation",
    "gamma_mode": "full",
    "big_gamma_mode": "quadrature",
    "rel_tol": 1e-8,
    "abs_tol": 1e-10,
    "n_real": 0,
    "master_seed": 2024,
    "omega0": 1.0,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model_kind: str
    model_params: dict
    method: str
    gamma_mode: str
    big_gamma_mode: str
    t_max: float
    step: float
    rel_tol: float
    abs_tol: float
    n_real: int
    master_seed: int
    omega0: float
    elements: list[tuple[int, int]]
    record_coherence: bool
    record_purity: bool

    def echo(self) -> dict:
        return {
            "model": {"kind": self.model_kind, **self.model_params},
            "run": {
                "method": self.method, "gamma_mode": self.gamma_mode,
                "big_gamma_mode": self.big_gamma_mode, "t_max": self.t_max,
                "step": self.step, "rel_tol": self.rel_tol,
                "abs_tol": self.abs_tol, "n_real": self.n_real,
                "master_seed": self.master_seed, "omega0": self.omega0,
            },
            "observables": {
                "elements": [f"{j},{k}" for j, k in self.elements],
                "coherence": self.record_coherence,
                "purity": self.record_purity,
            },
        }


def _default_elements(kind: str) -> list[tuple[int, int]]:
    # 1-based level labels, matching the model documentation
    if kind == "qubit":
        return [(1, 2)]
    if kind == "bose_hubbard":
        return [(1, 2), (1, 4)]
    return []


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    model = dict(raw.get("model", {}))
    kind = model.pop("kind", None)
    if kind not in _MODEL_DEFAULTS:
        raise ConfigError(f"model.kind must be one of {list(_MODEL_DEFAULTS)}, got {kind!r}")
    params = dict(_MODEL_DEFAULTS[kind])
    unknown = set(model) - set(params)
    if unknown:
        raise ConfigError(f"unknown model parameters for {kind}: {sorted(unknown)}")
    params.update(model)

    run = dict(raw.get("run", {}))
    grid = dict(_GRID_DEFAULTS[kind])
    settings = dict(_RUN_DEFAULTS)
    for key in list(run):
        if key in grid:
            grid[key] = run.pop(key)
        elif key in settings:
            settings[key] = run.pop(key)
        else:
            raise ConfigError(f"unknown run setting: {key}")
    if settings["method"] not in METHODS:
        raise ConfigError(f"run.method must be one of {METHODS}")
    if settings["method"] in ("monte_carlo", "both") and int(settings["n_real"]) < 1:
        raise ConfigError(f"run.method={settings['method']} requires run.n_real >= 1")

    obs = dict(raw.get("observables", {}))
    elements_raw = obs.pop("elements", None)
    if elements_raw is None:
        elements = _default_elements(kind)
    else:
        elements = []
        for item in elements_raw:
            j, k = (int(x) for x in str(item).split(","))
            elements.append((j, k))
    cfg = ExperimentConfig(
        model_kind=kind, model_params=params,
        method=settings["method"], gamma_mode=settings["gamma_mode"],
        big_gamma_mode=settings["big_gamma_mode"],
        t_max=float(grid["t_max"]), step=float(grid["step"]),
        rel_tol=float(settings["rel_tol"]), abs_tol=float(settings["abs_tol"]),
        n_real=int(settings["n_real"]), master_seed=int(settings["master_seed"]),
        omega0=float(settings["omega0"]),
        elements=elements,
        record_coherence=bool(obs.pop("coherence", True)),
        record_purity=bool(obs.pop("purity", True)),
    )
    if obs:
        raise ConfigError(f"unknown observables settings: {sorted(obs)}")
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def build_model(cfg: ExperimentConfig) -> ModelBundle:
    p = cfg.model_params
    try:
        if cfg.model_kind == "qubit":
            return build_qubit(QubitModel(center=p["center"], sigma=p["sigma"],
                                          alpha=p["alpha"]))
        if cfg.model_kind == "lattice":
            alpha = p["alpha"]
            return build_lattice(LatticeModel(
                dim=int(p["dim"]), tilt=p["tilt_per_alpha"] * alpha,
                sigma=p["sigma_per_alpha"] * alpha, alpha=alpha,
                coupling=p["coupling"]))
        return build_bose_hubbard(BoseHubbardModel(
            bosons=int(p["bosons"]), hopping=p["hopping"],
            interaction=p["interaction"], tilt=p["tilt"], sigma=p["sigma"],
            alpha=p["alpha"]))
    except ValueError as exc:
        raise ConfigError(f"invalid {cfg.model_kind} model: {exc}") from exc


def _check_elements(cfg: ExperimentConfig, dim: int) -> list[tuple[int, int]]:
    out = []
    for j, k in cfg.elements:
        if not (1 <= j <= dim and 1 <= k <= dim):
            raise ConfigError(f"element ({j},{k}) outside 1..{dim}")
        out.append((j - 1, k - 1))
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class RunResult:
    directory: Path
    metadata: dict
    summary: dict
    times: np.ndarray
    states_me: np.ndarray | None
    states_mc: np.ndarray | None


def run_experiment(cfg: ExperimentConfig, out_dir, workers: int | None = None) -> RunResult:
    t_start = time.time()
    bundle = build_model(cfg)
    elements = _check_elements(cfg, bundle.dim)
    grid = TimeGrid(t_max=cfg.t_max, step=cfg.step,
                    rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    times = grid.times()

    traj_me: Trajectory | None = None
    traj_mc: AveragedTrajectory | None = None
    if cfg.method in ("master_equation", "both"):
        gen = PerturbativeGenerator(bundle.spectral, bundle.coupling, bundle.alpha,
                                    gamma_mode=cfg.gamma_mode,
                                    big_gamma_mode=cfg.big_gamma_mode)
        traj_me = gen.integrate(bundle.rho0, grid)
    if cfg.method in ("monte_carlo", "both"):
        sampler = EnsembleSampler(bundle, n_real=cfg.n_real,
                                  master_seed=cfg.master_seed)
        traj_mc = average(sampler, bundle.rho0, times, workers=workers)

    rho_inf = asymptotic_state(bundle.mean_hamiltonian(), bundle.rho0)
    c_inf = total_coherence(rho_inf)

    # ----- CSV rows -----
    header = ["t"]
    columns: list[np.ndarray] = [times]

    def add(name: str, values: np.ndarray):
        header.append(name)
        columns.append(np.asarray(values, dtype=float))

    for (j0, k0), (j, k) in zip(elements, cfg.elements):
        if traj_me is not None:
            add(f"re_rho_{j}_{k}_me", traj_me.element(j0, k0).real)
            add(f"im_rho_{j}_{k}_me", traj_me.element(j0, k0).imag)
        if traj_mc is not None:
            add(f"re_rho_{j}_{k}_mc", traj_mc.element(j0, k0).real)
            add(f"im_rho_{j}_{k}_mc", traj_mc.element(j0, k0).imag)
            add(f"stderr_rho_{j}_{k}_mc", traj_mc.stderr()[:, j0, k0])
            add(f"stderr_re_rho_{j}_{k}_mc", traj_mc.stderr_real()[:, j0, k0])
    if cfg.record_coherence:
        if traj_me is not None:
            add("coherence_me", traj_me.coherence())
        if traj_mc is not None:
            add("coherence_mc", traj_mc.coherence())
    if cfg.record_purity:
        if traj_me is not None:
            add("purity_me", traj_me.purity())
        if traj_mc is not None:
            add("purity_mc", traj_mc.purity())
    fid = None
    if traj_me is not None and traj_mc is not None:
        fid = np.array([fidelity(a, b) for a, b in
                        zip(traj_me.states, traj_mc.states)])
        add("fidelity_me_mc", fid)

    # ----- summary -----
    summary: dict = {
        "asymptotic_coherence": c_inf,
        "asymptotic_coherence_per_level": c_inf / bundle.dim,
    }
    for name, traj in (("me", traj_me), ("mc", traj_mc)):
        if traj is None:
            continue
        c = traj.coherence()
        k_back = max(1, int(round(0.05 * (len(times) - 1))))
        slope = abs(c[-1] - c[-1 - k_back]) / (times[-1] - times[-1 - k_back])
        summary[f"plateau_coherence_{name}"] = float(c[-1])
        summary[f"plateau_coherence_per_level_{name}"] = float(c[-1]) / bundle.dim
        summary[f"plateau_slope_{name}"] = float(slope)
        summary[f"plateau_reached_{name}"] = bool(slope < PLATEAU_SLOPE_TOL * max(1.0, c[0]))
        summary[f"max_trace_error_{name}"] = float(
            np.max(np.abs(np.einsum("tjj->t", traj.states) - 1.0)))
        summary[f"positivity_floor_{name}"] = float(
            min(np.linalg.eigvalsh(s)[0] for s in traj.states))
    if traj_me is not None:
        summary["final_coherence_me"] = float(traj_me.coherence()[-1])
    if fid is not None:
        summary["min_fidelity_me_mc"] = float(fid.min())
        pur_me = traj_me.purity()
        pur_mc = traj_mc.purity()
        ratio_dev = np.abs(pur_me / pur_mc - 1.0)
        summary["max_purity_ratio_dev"] = float(ratio_dev.max())
        summary["max_purity_ratio_dev_time"] = float(times[int(ratio_dev.argmax())])
    if traj_mc is not None:
        summary["max_stderr_mc"] = float(traj_mc.stderr().max())

    # ----- write bundle -----
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    table = np.column_stack(columns)
    for row in table:
        writer.writerow([_fmt(x) for x in row])
    (out / "results.csv").write_text(buf.getvalue())

    arrays = {"times": times}
    if traj_me is not None:
        arrays["states_me"] = traj_me.states
    if traj_mc is not None:
        arrays["states_mc"] = traj_mc.states
        arrays["stderr_mc"] = traj_mc.stderr()
    with open(out / "states.npz", "wb") as fh:
        np.savez(fh, **arrays)

    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    metadata = {
        "config": cfg.echo(),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "wall_time_s": time.time() - t_start,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    return RunResult(directory=out, metadata=metadata, summary=summary,
                     times=times,
                     states_me=None if traj_me is None else traj_me.states,
                     states_mc=None if traj_mc is None else traj_mc.states)


def load_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    return header, rows


def verify_bundle(directory) -> dict:
    """Recompute summary values from the stored rows/states; raise on mismatch.

    Returns the stored summary on success. Values derived from CSV rows must
    match to 1e-12; the asymptotic coherence is recomputed from the config.
    """
    directory = Path(directory)
    summary = json.loads((directory / "summary.json").read_text())
    metadata = json.loads((directory / "metadata.json").read_text())
    header, rows = load_csv(directory / "results.csv")
    times = rows[:, 0]
    for name in ("me", "mc"):
        col = f"coherence_{name}"
        if col in header and f"plateau_coherence_{name}" in summary:
            c = rows[:, header.index(col)]
            if abs(c[-1] - summary[f"plateau_coherence_{name}"]) > 1e-12:
                raise ValueError(f"summary plateau_coherence_{name} does not "
                                 "match the CSV rows")
    cfg = parse_config(_config_to_toml(metadata["config"]))
    bundle = build_model(cfg)
    rho_inf = asymptotic_state(bundle.mean_hamiltonian(), bundle.rho0)
    if abs(total_coherence(rho_inf) - summary["asymptotic_coherence"]) > 1e-10:
        raise ValueError("summary asymptotic_coherence does not match an "
                         "independent recomputation")
    n_expected = int(round(cfg.t_max / cfg.step)) + 1
    if rows.shape[0] != n_expected:
        raise ValueError(f"CSV row count {rows.shape[0]} != sample count {n_expected}")
    if not np.allclose(times, np.linspace(0, cfg.t_max, n_expected), atol=1e-12):
        raise ValueError("CSV time column does not match the configured grid")
    return summary


def _config_to_toml(echo: dict) -> str:
    lines = []
    for section, body in echo.items():
        lines.append(f"[{section}]")
        for key, val in body.items():
            if isinstance(val, str):
                lines.append(f'{key} = "{val}"')
            elif isinstance(val, bool):
                lines.append(f"{key} = {str(val).lower()}")
            elif isinstance(val, list):
                items = ", ".join(f'"{v}"' for v in val)
                lines.append(f"{key} = [{items}]")
            else:
                lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


def compare_runs(dir_a, dir_b, fidelity_threshold: float = 0.999,
                 purity_dev_threshold: float = 0.10) -> dict:
    """Per-time fidelity, purity ratio and coherence gap between two runs.

    Each run contributes its master-equation states if present, otherwise its
    Monte Carlo states. Time grids must match exactly.
    """
    def states_of(d):
        with np.load(Path(d) / "states.npz") as f:
            ts = f["times"]
            key = "states_me" if "states_me" in f else "states_mc"
            return ts, f[key]

    ts_a, st_a = states_of(dir_a)
    ts_b, st_b = states_of(dir_b)
    if ts_a.shape != ts_b.shape or not np.allclose(ts_a, ts_b, atol=1e-12):
        raise ValueError("runs have different time grids")
    fid = np.array([fidelity(a, b) for a, b in zip(st_a, st_b)])
    pur_a = np.real(np.einsum("tjk,tkj->t", st_a, st_a))
    pur_b = np.real(np.einsum("tjk,tkj->t", st_b, st_b))
    ratio = pur_a / pur_b

    def coh(st):
        absm = np.abs(st)
        return absm.sum(axis=(1, 2)) - np.einsum("tjj->t", absm)

    dc = np.abs(coh(st_a) - coh(st_b))
    report = {
        "times": ts_a,
        "fidelity": fid,
        "purity_ratio": ratio,
        "min_fidelity": float(fid.min()),
        "min_fidelity_time": float(ts_a[int(fid.argmin())]),
        "max_purity_ratio_dev": float(np.abs(ratio - 1.0).max()),
        "max_purity_ratio_dev_time": float(ts_a[int(np.abs(ratio - 1.0).argmax())]),
        "max_coherence_gap": float(dc.max()),
        "fidelity_threshold": fidelity_threshold,
        "purity_dev_threshold": purity_dev_threshold,
        "fidelity_ok": bool(fid.min() >= fidelity_threshold),
        "purity_ok": bool(np.abs(ratio - 1.0).max() <= purity_dev_threshold),
    }
    return report


def bundled_config_dir() -> Path:
    return Path(__file__).parent / "configs"


def bundled_configs() -> dict[str, Path]:
    return {p.stem: p for p in sorted(bundled_config_dir().glob("*.toml"))}
