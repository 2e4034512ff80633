"""Command-line experiment driver.

    hmc-lab run <config.toml> [--workers N] [--output-dir DIR]
    hmc-lab validate <config.toml>
    hmc-lab list-experiments

Exit codes: 0 success, 2 configuration/validation failure, 3 numeric
failure, 4 declared experiment check failed.  Every run writes
``summary.json`` (inputs echo, outputs, versions, wall time) plus the
experiment's CSV artifacts into the configured output directory; CSV
bytes are deterministic for a fixed config and seed, independent of the
worker count.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .assumptions import check_a1, check_a2
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .diagnostics import (
    drift_estimate,
    energy_decomposition,
    energy_error_trace,
    rejection_mass,
    smallset_probe,
    tail_acceptance,
    tv_decay,
)
from .errors import (
    ConfigurationError,
    ConfigValidationError,
    ExperimentCheckError,
    NumericError,
    OracleError,
)
from .integrator import PhaseState, leapfrog_run, write_trajectory_csv
from .io import write_csv, write_json
from .kernel import chain_summary, run_chain, write_chain_csv
from .parallel import resolve_workers
from .potentials import build_family
from .rng import make_rng

_EXPERIMENT_BLURBS = {
    "sample": "run a chain and write the samples",
    "trace-energy": "record one leapfrog orbit with per-step energy increments",
    "horizon": "largest step count with negative energy error, per start radius",
    "tail-accept": "fraction of far-field proposals with non-positive energy error",
    "drift": "exponential drift ratios of the proposal kernel over a multiplier grid",
    "rejection-mass": "probability of uphill-and-inward proposals, per radius",
    "smallset": "minorization constants via momentum-space inversion of the flow",
    "tv-decay": "total-variation distance to the target along the chain",
    "check-assumptions": "empirical regularity / tail-shape condition probes",
    "decompose-energy": "six-term line-integral split of the one-step energy error",
}


def _versions() -> dict:
    return {
        "hmc_lab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    }


def _fixed_cfg(cfg: ExperimentConfig):
    return cfg.kernel.cfg  # validated upstream: fixed-kernel experiments only


def _run_sample(cfg, model, out: Path, workers: int) -> dict:
    q0 = np.asarray(cfg.params.get("q0", np.zeros(model.dim)), dtype=float)
    run = run_chain(model, q0, cfg.kernel, cfg.params["n"], seed=cfg.seed)
    write_chain_csv(run, out / "chain.csv")
    write_json(out / "chain_summary.json", chain_summary(run))
    outputs = chain_summary(run)
    if run.error is not None:
        outputs["halted"] = True
    return outputs


def _run_trace_energy(cfg, model, out: Path, workers: int) -> dict:
    state = PhaseState(np.asarray(cfg.params["q0"]), np.asarray(cfg.params["p0"]))
    traj = leapfrog_run(model, state, _fixed_cfg(cfg))
    write_trajectory_csv(traj, out / "trajectory.csv")
    return {
        "n_steps": traj.n_steps,
        "h": traj.h,
        "H0": float(traj.energies[0]),
        "H_final": float(traj.energies[-1]),
        "dh_total": float(traj.energies[-1] - traj.energies[0]),
    }


def _run_horizon(cfg, model, out: Path, workers: int) -> dict:
    lf = _fixed_cfg(cfg)
    radii = cfg.params["radii"]
    t_max = cfg.params["t_max"]
    p_norm = cfg.params["p_norm"]
    # Deterministic starts: q0 on the first axis, p0 pointing straight inward.
    # The horizon is an integrator study, not a Monte Carlo estimate, so the
    # initial conditions should not depend on the seed.
    e1 = np.zeros(model.dim)
    e1[0] = 1.0
    rows = []
    for r in radii:
        state = PhaseState(r * e1, -p_norm * e1)
        trace = energy_error_trace(model, state, lf.h, t_max)
        keeps_falling = np.isfinite(trace[1:]) & (trace[1:] < 0.0)
        t_tilde = int(keeps_falling.sum()) if keeps_falling.all() else int(np.argmin(keeps_falling))
        rows.append((r, t_tilde))
        write_csv(
            out / f"energy_trace_r{r:g}.csv",
            ["k", "H_k_minus_H_0"],
            [(k, trace[k]) for k in range(len(trace))],
        )
    write_csv(out / "horizon.csv", ["radius", "T_tilde"], rows)
    horizons = [t for _, t in rows]
    if cfg.params["require_increasing"]:
        nondecreasing = all(b >= a for a, b in zip(horizons, horizons[1:]))
        if not (nondecreasing and horizons[-1] > horizons[0]):
            raise ExperimentCheckError(
                f"horizon not increasing across radii: {dict(zip(radii, horizons))}"
            )
    return {"radii": list(radii), "T_tilde": horizons}


def _run_tail_accept(cfg, model, out: Path, workers: int) -> dict:
    profile = tail_acceptance(
        model,
        _fixed_cfg(cfg),
        cfg.params["radii"],
        cfg.params["gamma"],
        cfg.params["n_momenta"],
        make_rng(cfg.seed),
        workers=workers,
        horizon_t_max=cfg.params.get("horizon_t_max"),
    )
    write_json(out / "tail.json", profile)
    write_csv(
        out / "tail.csv",
        ["radius", "fraction", "worst_dh", "excluded"],
        zip(profile.radii, profile.fractions, profile.worst_dh, profile.excluded),
    )
    if cfg.params["require_full_at_largest"] and profile.fractions[-1] < 1.0:
        raise ExperimentCheckError(
            f"tail acceptance at radius {profile.radii[-1]} is {profile.fractions[-1]}, expected 1.0"
        )
    return {"radii": list(profile.radii), "fractions": list(profile.fractions)}


def _run_drift(cfg, model, out: Path, workers: int) -> dict:
    report = drift_estimate(
        model,
        _fixed_cfg(cfg),
        cfg.params["radii"],
        cfg.params["n_momenta"],
        make_rng(cfg.seed),
        a_grid=cfg.params["a_grid"],
        workers=workers,
    )
    write_json(out / "drift.json", report)
    write_csv(
        out / "drift.csv",
        ["radius", "ratio", "stderr"],
        zip(report.radii, report.ratios, report.stderrs),
    )
    if cfg.params["require_drift"] and not report.drift_detected:
        raise ExperimentCheckError(
            f"no drift detected at radius {report.radii[-1]} (best a = {report.a})"
        )
    return {
        "a": report.a,
        "lambda_hat": report.lambda_hat,
        "b_hat": report.b_hat,
        "drift_detected": report.drift_detected,
    }


def _run_rejection_mass(cfg, model, out: Path, workers: int) -> dict:
    curve = rejection_mass(
        model,
        _fixed_cfg(cfg),
        cfg.params["a"],
        cfg.params["radii"],
        cfg.params["n_momenta"],
        make_rng(cfg.seed),
        workers=workers,
    )
    write_json(out / "rejection_mass.json", curve)
    write_csv(
        out / "rejection_mass.csv",
        ["radius", "mass", "stderr"],
        zip(curve.radii, curve.masses, curve.stderrs),
    )
    return {"radii": list(curve.radii), "masses": list(curve.masses)}


def _run_smallset(cfg, model, out: Path, workers: int) -> dict:
    rng = make_rng(cfg.seed)
    growth = None
    if "p_radius" in cfg.params:
        from .diagnostics import proposal_growth_probe

        growth = proposal_growth_probe(
            model,
            _fixed_cfg(cfg),
            cfg.params["R"],
            cfg.params["n_samples"],
            rng,
            p_radius=cfg.params["p_radius"],
        )
    probe = smallset_probe(
        model,
        _fixed_cfg(cfg),
        cfg.params["R"],
        cfg.params["M"],
        cfg.params["grid_n"],
        rng,
        n_starts=cfg.params["n_starts"],
        growth=growth,
    )
    write_json(out / "smallset.json", probe)
    write_csv(
        out / "smallset.csv",
        ["R", "M", "M_tilde", "L_hat", "coverage_fraction", "epsilon_hat"],
        [(probe.R, probe.M, probe.m_tilde, probe.l_hat, probe.coverage_fraction, probe.epsilon_hat)],
    )
    return {
        "m_tilde": probe.m_tilde,
        "coverage_fraction": probe.coverage_fraction,
        "epsilon_hat": probe.epsilon_hat,
    }


def _run_tv_decay(cfg, model, out: Path, workers: int) -> dict:
    curve = tv_decay(
        model,
        cfg.kernel,
        np.asarray(cfg.params["q0"]),
        cfg.params["checkpoints"],
        cfg.params["n_chains"],
        bins=cfg.params["bins"],
        seed=cfg.seed,
        workers=workers,
        bootstrap=cfg.params["bootstrap"],
    )
    write_json(out / "tv.json", curve)
    write_csv(out / "tv.csv", ["iteration", "tv"], zip(curve.iterations, curve.tv_hat))
    return {
        "rho_hat": curve.rho_hat,
        "r2": curve.r2,
        "noise_floor": curve.noise_floor,
        "fit_note": curve.fit_note,
    }


def _run_check_assumptions(cfg, model, out: Path, workers: int) -> dict:
    params = cfg.params
    reports = []
    if "a1_beta" in params:
        reports.append(check_a1(model, params["a1_beta"], radii=params["radii"],
                                n_samples=params["n_samples"], seed=cfg.seed))
    if "a2_m" in params:
        reports.append(check_a2(model, params["a2_m"], radii=params["radii"],
                                n_samples=params["n_samples"], seed=cfg.seed))
    write_json(out / "assumptions.json", reports)
    rows = []
    for rep in reports:
        for c in rep.conditions:
            rows.append((rep.assumption, c.condition, int(c.passed), c.constant))
    write_csv(out / "assumptions.csv", ["assumption", "condition", "passed", "constant"], rows)
    outputs = {rep.assumption: rep.passed for rep in reports}
    for rep in reports:
        expect_key = f"expect_{rep.assumption}"
        if expect_key in params and params[expect_key] != rep.passed:
            raise ExperimentCheckError(
                f"{rep.assumption} probe returned passed={rep.passed}, expected {params[expect_key]}"
            )
    return outputs


def _run_decompose_energy(cfg, model, out: Path, workers: int) -> dict:
    state = PhaseState(np.asarray(cfg.params["q0"]), np.asarray(cfg.params["p0"]))
    dec = energy_decomposition(model, state, _fixed_cfg(cfg).h, quad_nodes=cfg.params["quad_nodes"])
    write_json(out / "energy.json", dec.as_dict())
    write_csv(out / "energy_terms.csv", ["term", "value"], list(dec.as_dict().items()))
    return {"total": dec.total, "direct": dec.direct, "residual": dec.residual}


_RUNNERS = {
    "sample": _run_sample,
    "trace-energy": _run_trace_energy,
    "horizon": _run_horizon,
    "tail-accept": _run_tail_accept,
    "drift": _run_drift,
    "rejection-mass": _run_rejection_mass,
    "smallset": _run_smallset,
    "tv-decay": _run_tv_decay,
    "check-assumptions": _run_check_assumptions,
    "decompose-energy": _run_decompose_energy,
}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> dict:
    """Execute one validated experiment; returns the summary mapping."""
    workers = resolve_workers(workers)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_family(cfg.potential)
    t0 = time.perf_counter()
    status = "ok"
    outputs: dict = {}
    err: Exception | None = None
    try:
        outputs = _RUNNERS[cfg.experiment](cfg, model, out, workers)
    except Exception as exc:  # record, then re-raise for exit-code mapping
        status = "failed"
        outputs = {"error": f"{type(exc).__name__}: {exc}"}
        err = exc
    summary = {
        "experiment": cfg.experiment,
        "status": status,
        "inputs": cfg.raw,
        "outputs": outputs,
        "versions": _versions(),
        "workers": workers,
        "wall_time_s": time.perf_counter() - t0,
    }
    write_json(out / "summary.json", summary)
    if err is not None:
        raise err
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hmc-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default: HMC_LAB_WORKERS or all cores)")
    p_run.add_argument("--output-dir", type=Path, default=None,
                       help="override the configured output directory")

    p_val = sub.add_parser("validate", help="validate a config file and exit")
    p_val.add_argument("config", type=Path)

    sub.add_parser("list-experiments", help="list available experiment kinds")

    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(f"{name}: {_EXPERIMENT_BLURBS[name]}")
        return 0

    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"ok: {cfg.experiment} experiment, output_dir={cfg.output_dir}")
            return 0
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        summary = run_experiment(cfg, workers=args.workers)
        print(f"ok: wrote {cfg.output_dir}/summary.json")
        for k, v in summary["outputs"].items():
            print(f"  {k} = {v}")
        return 0
    except ConfigValidationError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, OracleError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ExperimentCheckError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    raise SystemExit(main())
