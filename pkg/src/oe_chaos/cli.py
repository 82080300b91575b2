"""Batch runner: ``oe-chaos <kind> [flags]`` or ``oe-chaos list``.

Each run writes ``results.csv``, ``summary.json`` and ``config.resolved.json``
into ``--out``.  Exit status: 0 ok, 2 invalid configuration, 3 numerical
guard (momentum leakage, short Ehrenfest window, no interior peak,
tangent overflow).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import DivergenceError, PhasePoint, SingularMap, StandardMap, divergence_lyapunov, ensemble_lyapunov
from .core import QuantumState, ValidationError
from .diagnostics import (
    LyapunovSetup,
    PeakError,
    WindowError,
    aa_sweep,
    critical_point_vs_resolution,
    entropy_curvature,
    entropy_susceptibility,
    fine_pgm,
    kr_dynamic_sweep,
    kr_stationary_sweep,
    lyapunov_vs_parameter,
    lyapunov_vs_resolution,
    shot_noise_sweep,
    QuasimomentumEnsemble,
    coarse_shape,
    write_csv,
)
from .models import KickedRotorParams, LeakageError, SingularKickedRotorParams, build_propagator, step_array
from .phasespace import CoherentStateGrid, coherent_state, husimi_distribution, pgm_probability_array

logger = logging.getLogger("oe_chaos")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

# (kind, figure tag, description); order is the listing order
EXPERIMENTS = [
    ("kr-critical", "fig:kr-transition", "kicked-rotor momentum OE vs K; curvature peak locates the chaos transition"),
    ("aa-critical", "fig:aa-transition", "Aubry-Andre position OE vs lambda; susceptibility peak locates localization"),
    ("lyapunov", "fig:rate-vs-parameter", "OE growth rates (PGM-Husimi and momentum) vs K or b, next to the classical exponent"),
    ("lyapunov-resolution", "fig:rate-vs-cells", "OE growth rates vs number of coarse-graining cells"),
    ("shots", "fig:shot-noise", "OE growth rates from finite-shot Husimi histograms vs exact probabilities"),
    ("classical-lyapunov", "fig:classical-exponent", "Benettin exponents of the standard and singular maps"),
    ("husimi-dump", "fig:husimi-snapshot", "Husimi and PGM cell probabilities of one evolved coherent state"),
]

DEFAULTS: dict[str, dict] = {
    "kr-critical": {
        "N": 1024, "chi": [4, 8, 16, 32, 64], "K_min": 0.3, "K_max": 3.0, "K_steps": 41,
        "n_kicks": 2000, "n_members": 100, "avg_fraction": 0.25, "hbar_eff": None,
        "modes": ["dynamic"], "n_beta_stationary": 4, "target": [0.92, 1.06],
    },
    "aa-critical": {
        "N": 1024, "chi": [4, 8, 16, 32, 64], "lambda_min": 0.5, "lambda_max": 3.5, "lambda_steps": 61,
        "n_phi": 100, "J": 1.0, "n_times": 25, "horizon": None, "modes": ["eigen", "dynamic"],
        "target": [1.95, 2.05],
    },
    "lyapunov": {
        "model": "kr", "K": [5.0, 7.5, 10.0], "b": [0.0, 1.0, 2.0], "epsilon": 8.0, "alpha": 0.5,
        "d": 4096, "n_cells": 256, "n_members": 100, "sigma_cl": 2 * math.pi, "t_mix": 1,
        "classical_steps": 20000, "rel_tol": 0.10,
    },
    "lyapunov-resolution": {
        "model": "kr", "K": 10.0, "b": 0.0, "epsilon": 8.0, "alpha": 0.5, "d": 4096,
        "n_cells": [1, 4, 16, 64, 128, 256, 512, 1024, 2048, 4096], "n_members": 100,
        "sigma_cl": 2 * math.pi, "t_mix": 1, "classical_steps": 20000, "saturation_from": 128, "rel_tol": 0.03,
    },
    "shots": {
        "K": 10.0, "d": 4096, "n_cells": [64, 512], "n_shots": [1000, 10000, 100000], "n_members": 100,
        "sigma_cl": 2 * math.pi, "t_mix": 1, "classical_steps": 20000, "rel_tol": 0.15,
    },
    "classical-lyapunov": {
        "map": "standard", "K": [10.0, 50.0], "b": [0.0, 1.0, 2.0], "epsilon": 8.0, "alpha": 0.5,
        "n_init": 100, "n_steps": 100000, "n_transient": 100,
    },
    "husimi-dump": {
        "model": "kr", "K": 10.0, "b": 0.0, "epsilon": 8.0, "alpha": 0.5, "d": 256, "n_kicks": 3,
        "q0": math.pi, "p0": 0.0, "n_cells": 1024,
    },
}
COMMON = {"seed": 0}
# keys that never change results and so stay out of the hash
RUNTIME_KEYS = {"threads", "out"}


class ConfigError(ValidationError):
    pass


def list_experiments() -> str:
    w_kind = max(len(k) for k, _, _ in EXPERIMENTS)
    w_fig = max(len(f) for _, f, _ in EXPERIMENTS) + 2
    return "\n".join(f"{k:<{w_kind}}  {'[' + fig + ']':<{w_fig}}  {desc}" for k, fig, desc in EXPERIMENTS)


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    return int(x) if x.is_integer() and "." not in text else x


def _listify(v):
    if isinstance(v, str):
        return [_number(x.strip()) for x in v.split(",") if x.strip()]
    return list(v) if isinstance(v, (list, tuple)) else [v]


def resolve_config(kind: str, file_cfg: dict, overrides: dict) -> dict:
    """Defaults, then config file, then flags; unknown keys raise :class:`ConfigError`."""
    if kind not in DEFAULTS:
        raise ConfigError(f"unknown experiment kind {kind!r}; see 'oe-chaos list'")
    allowed = {**COMMON, **DEFAULTS[kind]}
    cfg = dict(allowed)
    for source in (file_cfg, overrides):
        for k, v in source.items():
            if k == "kind":
                if v != kind:
                    raise ConfigError(f"config kind {v!r} does not match requested {kind!r}")
                continue
            if k not in allowed:
                raise ConfigError(f"unknown config key {k!r} for {kind}")
            if isinstance(allowed[k], list) and allowed[k] and not isinstance(allowed[k][0], str) and k != "target":
                v = _listify(v)
            cfg[k] = v
    _validate(kind, cfg)
    return cfg


def _validate(kind: str, cfg: dict) -> None:
    """Build every model object the run will need so bad values fail before any work."""
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {cfg['seed']!r}")
    if kind == "kr-critical":
        for c in cfg["chi"]:
            if cfg["N"] % c:
                raise ConfigError(f"chi={c} does not divide N={cfg['N']}")
        if not 0 < cfg["K_min"] < cfg["K_max"] or cfg["K_steps"] < 5:
            raise ConfigError("need 0 < K_min < K_max and K_steps >= 5")
        for m in cfg["modes"]:
            if m not in ("dynamic", "stationary"):
                raise ConfigError(f"unknown kr-critical mode {m!r}")
        KickedRotorParams(cfg["K_min"], cfg["N"], cfg["hbar_eff"])
    elif kind == "aa-critical":
        for c in cfg["chi"]:
            if cfg["N"] % c:
                raise ConfigError(f"chi={c} does not divide N={cfg['N']}")
        if not cfg["lambda_min"] < cfg["lambda_max"] or cfg["lambda_steps"] < 3:
            raise ConfigError("need lambda_min < lambda_max and lambda_steps >= 3")
        for m in cfg["modes"]:
            if m not in ("eigen", "dynamic"):
                raise ConfigError(f"unknown aa-critical mode {m!r}")
    elif kind in ("lyapunov", "lyapunov-resolution", "shots", "husimi-dump"):
        model = cfg.get("model", "kr")
        if model not in ("kr", "skr"):
            raise ConfigError(f"model must be 'kr' or 'skr', got {model!r}")
        _rotor_params(cfg)
        if kind != "husimi-dump":
            cells = cfg["n_cells"] if isinstance(cfg["n_cells"], list) else [cfg["n_cells"]]
            for n in cells:
                if n < 1 or n & (n - 1) or n > 4 * cfg["d"]:
                    raise ConfigError(f"n_cells={n} must be a power of two no larger than 4 d")
    elif kind == "classical-lyapunov":
        if cfg["map"] not in ("standard", "singular"):
            raise ConfigError(f"map must be 'standard' or 'singular', got {cfg['map']!r}")
        if cfg["n_steps"] < 1000:
            raise ConfigError("n_steps must be >= 1000")
        if cfg["map"] == "singular":
            for b in cfg["b"]:
                SingularKickedRotorParams(cfg["epsilon"], cfg["alpha"], b, d=2)


def _rotor_params(cfg: dict):
    """Model parameter objects for the sweep values in ``cfg``."""
    model = cfg.get("model", "kr")
    if model == "kr":
        return [KickedRotorParams(float(K), cfg["d"]) for K in _listify(cfg["K"])]
    return [SingularKickedRotorParams(cfg["epsilon"], cfg["alpha"], float(b), d=cfg["d"]) for b in _listify(cfg["b"])]


def config_hash(kind: str, cfg: dict) -> str:
    payload = json.dumps({"kind": kind, **{k: v for k, v in cfg.items() if k not in RUNTIME_KEYS}}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _check(name: str, value, target, passed: bool | None) -> dict:
    return {"name": name, "value": value, "target": target, "pass": passed}


# ---------------------------------------------------------------------------
# experiment runners: each returns (columns, rows, estimates, checks)


def run_kr_critical(cfg, threads):
    Ks = np.exp(np.linspace(math.log(cfg["K_min"]), math.log(cfg["K_max"]), cfg["K_steps"]))
    ens = QuasimomentumEnsemble(cfg["n_members"], cfg["seed"])
    rows, estimates, checks = [], {}, []
    lo, hi = cfg["target"]
    for mode in cfg["modes"]:
        if mode == "dynamic":
            curves = kr_dynamic_sweep(Ks, cfg["chi"], cfg["N"], cfg["hbar_eff"], cfg["n_kicks"], ens, cfg["avg_fraction"], threads)
        else:
            curves = kr_stationary_sweep(Ks, cfg["chi"], cfg["N"], cfg["hbar_eff"], cfg["n_beta_stationary"], cfg["seed"], threads)
        for chi in sorted(curves):
            c = curves[chi]
            curv = dict(zip(entropy_curvature(c).parameter, entropy_curvature(c).values))
            for K, m, s in zip(c.parameter, c.mean, c.stderr):
                rows.append({"mode": mode, "chi": chi, "K": K, "mean_oe": m, "stderr": s, "curvature": curv.get(K, "")})
        for est in critical_point_vs_resolution(curves, order=2):
            key = f"{mode}/chi={est.chi}"
            estimates[key] = {"K_c_est": est.location, "uncertainty": est.uncertainty, "peak_height": est.peak_height}
            checks.append(_check(f"K_c_est {key}", est.location, [lo, hi], bool(lo <= est.location <= hi)))
    first = estimates[next(iter(estimates))]
    estimates["K_c_est"] = first["K_c_est"]
    return ["mode", "chi", "K", "mean_oe", "stderr", "curvature"], rows, estimates, checks


def run_aa_critical(cfg, threads):
    lams = np.linspace(cfg["lambda_min"], cfg["lambda_max"], cfg["lambda_steps"])
    res = aa_sweep(lams, cfg["chi"], cfg["N"], cfg["n_phi"], cfg["seed"], cfg["J"], cfg["n_times"], cfg["horizon"], threads, cfg["modes"])
    rows, estimates, checks = [], {}, []
    lo, hi = cfg["target"]
    for mode in cfg["modes"]:
        curves = res[mode]
        for chi in sorted(curves):
            c = curves[chi]
            sus = entropy_susceptibility(c)
            sd = dict(zip(sus.parameter, sus.values))
            for lam, m, s in zip(c.parameter, c.mean, c.stderr):
                rows.append({"mode": mode, "chi": chi, "lambda": lam, "mean_oe": m, "stderr": s, "susceptibility": sd.get(lam, "")})
        for est in critical_point_vs_resolution(curves, order=1):
            key = f"{mode}/chi={est.chi}"
            estimates[key] = {"lambda_c_est": est.location, "uncertainty": est.uncertainty, "peak_height": est.peak_height}
            checks.append(_check(f"lambda_c_est {key}", est.location, [lo, hi], bool(lo <= est.location <= hi)))
    estimates["lambda_c_est"] = estimates[next(iter(estimates))]["lambda_c_est"]
    return ["mode", "chi", "lambda", "mean_oe", "stderr", "susceptibility"], rows, estimates, checks


def _setup(cfg) -> LyapunovSetup:
    return LyapunovSetup(d=cfg["d"], n_members=cfg["n_members"], seed=cfg["seed"], sigma_cl=cfg["sigma_cl"],
                         t_mix=cfg["t_mix"], classical_steps=cfg["classical_steps"])


LYAP_COLUMNS = ["parameter", "lambda_cl", "t_lo", "t_hi", "lambda_pgm", "r2_pgm", "se_pgm", "lambda_mom", "r2_mom", "se_mom"]


def run_lyapunov(cfg, threads):
    setup = _setup(cfg)
    if cfg["model"] == "kr":
        rows = lyapunov_vs_parameter("kr", cfg["K"], setup, cfg["n_cells"], threads)
    else:
        rows = lyapunov_vs_parameter("skr", cfg["b"], setup, cfg["n_cells"], threads, epsilon=cfg["epsilon"], alpha=cfg["alpha"])
    checks = []
    for r in rows:
        dev = abs(r["lambda_pgm"] - r["lambda_cl"]) / r["lambda_cl"]
        checks.append(_check(f"pgm vs classical at {r['parameter']:g}", dev, cfg["rel_tol"], bool(dev <= cfg["rel_tol"])))
        checks.append(_check(f"pgm > mom at {r['parameter']:g}", r["lambda_pgm"] - r["lambda_mom"], 0.0, bool(r["lambda_pgm"] > r["lambda_mom"])))
    estimates = {"lambda_pgm": [r["lambda_pgm"] for r in rows], "lambda_mom": [r["lambda_mom"] for r in rows],
                 "lambda_cl": [r["lambda_cl"] for r in rows], "parameter": [r["parameter"] for r in rows]}
    return LYAP_COLUMNS, rows, estimates, checks


def run_lyapunov_resolution(cfg, threads):
    setup = _setup(cfg)
    cfg1 = {**cfg, "K": [cfg["K"]], "b": [cfg["b"]]}
    params = _rotor_params(cfg1)[0]
    rows = lyapunov_vs_resolution(params, sorted(cfg["n_cells"]), setup)
    checks = []
    for a, b in zip(rows, rows[1:]):
        if a["n_cells"] >= cfg["saturation_from"] and a["lambda_pgm"] > 0:
            inc = abs(b["lambda_pgm"] - a["lambda_pgm"]) / a["lambda_pgm"]
            checks.append(_check(f"increment {a['n_cells']}->{b['n_cells']}", inc, cfg["rel_tol"], bool(inc < cfg["rel_tol"])))
    estimates = {"n_cells": [r["n_cells"] for r in rows], "lambda_pgm": [r["lambda_pgm"] for r in rows],
                 "lambda_mom": [r["lambda_mom"] for r in rows], "lambda_cl": rows[0]["lambda_cl"]}
    return ["n_cells", "lambda_cl", "t_lo", "t_hi", "lambda_pgm", "r2_pgm", "lambda_mom", "r2_mom"], rows, estimates, checks


def run_shots(cfg, threads):
    setup = _setup(cfg)
    rows = shot_noise_sweep(KickedRotorParams(cfg["K"], cfg["d"]), cfg["n_cells"], cfg["n_shots"], setup, cfg["seed"])
    checks = [
        _check(f"cells={r['n_cells']} shots={r['n_shots']}", r["rel_dev"], cfg["rel_tol"], bool(r["rel_dev"] <= cfg["rel_tol"]))
        for r in rows if r["n_shots"]
    ]
    estimates = {f"cells={r['n_cells']}/shots={r['n_shots']}": r["slope"] for r in rows}
    return ["n_cells", "n_shots", "t_lo", "t_hi", "slope", "r2", "rel_dev", "oe_bias_t_hi"], rows, estimates, checks


def run_classical(cfg, threads):
    rows, checks = [], []
    if cfg["map"] == "standard":
        maps = [(K, StandardMap(K)) for K in cfg["K"]]
    else:
        maps = [(b, SingularMap(SingularKickedRotorParams(cfg["epsilon"], cfg["alpha"], b, d=2))) for b in cfg["b"]]
    for v, cmap in maps:
        ens = ensemble_lyapunov(cmap, cfg["n_init"], cfg["n_steps"], cfg["seed"], cfg["n_transient"])
        z0 = PhasePoint(*np.random.default_rng(cfg["seed"]).uniform(0.0, 2 * math.pi, 2))
        div = divergence_lyapunov(cmap, z0, cfg["n_steps"], n_transient=cfg["n_transient"])
        rows.append({"parameter": v, "lambda_benettin": ens.mean, "n_regular": int(ens.regular.sum()), "lambda_divergence": div})
        if cfg["map"] == "standard" and v >= 20:
            dev = abs(ens.mean - math.log(v / 2)) / math.log(v / 2)
            checks.append(_check(f"ln(K/2) asymptote at K={v:g}", dev, 0.02, bool(dev <= 0.02)))
    return ["parameter", "lambda_benettin", "n_regular", "lambda_divergence"], rows, {
        "lambda_cl": [r["lambda_benettin"] for r in rows], "parameter": [r["parameter"] for r in rows]}, checks


def run_husimi(cfg, threads):
    cfg1 = {**cfg, "K": [cfg["K"]], "b": [cfg["b"]]}
    params = _rotor_params(cfg1)[0]
    hb = params.hbar_eff
    psi = coherent_state(cfg["q0"], cfg["p0"], math.sqrt(hb / 2), params.d, hb).amplitudes
    prop = build_propagator(params)
    for _ in range(cfg["n_kicks"]):
        psi = step_array(psi, prop)
    psi = psi / np.linalg.norm(psi)
    grid = CoherentStateGrid(*coarse_shape(cfg["n_cells"]), params.d, hb)
    q = husimi_distribution(QuantumState(psi), grid).values
    pgm = pgm_probability_array(psi, fine_pgm(params.d, cfg["n_cells"])).reshape(q.shape)
    rows = []
    for k, qc in enumerate(grid.q_centers):
        for l, pc in enumerate(grid.p_centers):
            rows.append({"q_index": k, "p_index": l, "q": qc, "p": pc, "husimi": q[k, l], "pgm": pgm[k, l]})
    estimates = {"husimi_total": float(q.sum()), "pgm_total": float(pgm.sum())}
    return ["q_index", "p_index", "q", "p", "husimi", "pgm"], rows, estimates, []


RUNNERS = {
    "kr-critical": run_kr_critical,
    "aa-critical": run_aa_critical,
    "lyapunov": run_lyapunov,
    "lyapunov-resolution": run_lyapunov_resolution,
    "shots": run_shots,
    "classical-lyapunov": run_classical,
    "husimi-dump": run_husimi,
}


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        return float(o) if math.isfinite(o) else None
    return o


def run(kind: str, cfg: dict, out: Path, threads: int = 1) -> dict:
    """Execute one resolved configuration and write its three artifacts."""
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(kind, cfg)
    with open(out / "config.resolved.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable({"kind": kind, "config": cfg, "config_hash": h}), fh, indent=2, sort_keys=True)
    columns, rows, estimates, checks = RUNNERS[kind](cfg, threads)
    write_csv(out / "results.csv", columns, rows, {"config-hash": h, "experiment": kind, "units": "nats, kicks", "version": __version__})
    verdicts = [c["pass"] for c in checks if c["pass"] is not None]
    summary = {
        "kind": kind,
        "config_hash": h,
        "estimates": estimates,
        "checks": checks,
        "pass": all(verdicts) if verdicts else None,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
    return summary


def _thread_count(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("OE_CHAOS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"OE_CHAOS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oe-chaos", description="Observational-entropy chaos experiments.")
    p.add_argument("kind", help="experiment kind, or 'list'")
    p.add_argument("--config", type=Path, help="JSON file of flat key/value overrides")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--K-min", dest="K_min", type=float)
    p.add_argument("--K-max", dest="K_max", type=float)
    p.add_argument("--K-steps", dest="K_steps", type=int)
    p.add_argument("--K", dest="K", help="kick strength(s), comma separated")
    p.add_argument("--lambda-min", dest="lambda_min", type=float)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--lambda-steps", dest="lambda_steps", type=int)
    p.add_argument("--chi", help="coarse-graining length(s), comma separated")
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--d", dest="d", type=int)
    p.add_argument("--n-cells", dest="n_cells", help="cell count(s), comma separated")
    p.add_argument("--n-shots", dest="n_shots", help="shot count(s), comma separated")
    p.add_argument("--alpha", type=float)
    p.add_argument("--b", help="SKR offset(s), comma separated")
    p.add_argument("--epsilon", type=float)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


FLAG_KEYS = ["seed", "K_min", "K_max", "K_steps", "K", "lambda_min", "lambda_max", "lambda_steps",
             "chi", "N", "d", "n_cells", "n_shots", "alpha", "b", "epsilon"]


def _scalarish(kind: str, key: str, value):
    """Comma-list flags collapse to a scalar where the experiment expects one."""
    default = DEFAULTS.get(kind, {}).get(key)
    if isinstance(value, str) and not isinstance(default, list):
        vals = _listify(value)
        if len(vals) != 1:
            raise ConfigError(f"{key} takes a single value for {kind}")
        return vals[0]
    return value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.kind == "list":
        print(list_experiments())
        return EXIT_OK
    try:
        file_cfg = {}
        if args.config is not None:
            try:
                file_cfg = json.loads(args.config.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise ConfigError("config file must hold a JSON object")
        overrides = {k: _scalarish(args.kind, k, getattr(args, k)) for k in FLAG_KEYS if getattr(args, k) is not None}
        cfg = resolve_config(args.kind, file_cfg, overrides)
        threads = _thread_count(args.threads)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        summary = run(args.kind, cfg, args.out, threads)
    except (LeakageError, WindowError, DivergenceError, PeakError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(_jsonable({"kind": summary["kind"], "pass": summary["pass"], "out": str(args.out)})))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
