"""Command line runner: ``dissipative-qml run|validate <config.json>``.

Exit status is 0 on success, 2 for configuration errors and 3 for runtime
errors. Outputs are staged in a scratch directory and moved into place only
when the whole experiment has succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import shutil
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import classify, lindblad, qcore, qrc, qrl
from .config import ConfigError, ExperimentConfig, describe_schema, parse_config

log = logging.getLogger("dissipative_qml")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
THREADS_ENV = "DQML_THREADS"


def load_config(text: str, output_dir: str | None = None, master_seed: int | None = None) -> ExperimentConfig:
    """Parse ``text`` after applying command-line overrides."""
    if output_dir is None and master_seed is None:
        return parse_config(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    if output_dir is not None:
        doc["output_dir"] = output_dir
    if master_seed is not None:
        doc["master_seed"] = master_seed
    return parse_config(json.dumps(doc))


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        n = flag
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError([f"{THREADS_ENV} must be a positive integer, got {raw!r}"]) from None
    if n < 1:
        raise ConfigError([f"thread count must be a positive integer, got {n}"])
    return n


# --- experiments --------------------------------------------------------------------
# Each runner writes into ``out`` and returns the seeds it consumed.


def _qrl_params(p: dict, seed: int, **extra) -> qrl.QrlParams:
    return qrl.QrlParams(
        reward_rate=p["reward_rate"],
        punishment_rate=p["punishment_rate"],
        n_realizations=p["n_realizations"],
        n_iterations=p["n_iterations"],
        initial_state=tuple(complex(re, im) for re, im in p["initial_state"]),
        master_seed=seed,
        eigenbasis_angles=tuple(p["eigenbasis_angles"]),
        window_fraction=p["window_fraction"],
        **extra,
    )


def _run_qrl_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    if p["tau_values"] is None:
        grid = np.linspace(p["tau_start"], p["tau_stop"], p["tau_num"])
    else:
        grid = np.asarray(p["tau_values"], dtype=float)
    configs = [tuple(float(x) for x in c) for c in p["configs"]]
    rows = qrl.sweep_tau(_qrl_params(p, cfg.master_seed), grid, configs, workers=threads)
    qrl.write_sweep_csv(rows, out / "sweep.csv")
    return {"qrl_master_seed": cfg.master_seed}


def _gamma_tag(g: float) -> str:
    return repr(float(g)).replace(".", "p")


def _run_qrl_iterations(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    for g0 in p["gamma0_values"]:
        params = _qrl_params(p, cfg.master_seed, gamma0_tilde=float(g0),
                             T_tilde=float(p["T_tilde"]), tau_tilde=float(p["tau_tilde"]))
        agg = qrl.run_ensemble(params, workers=threads)
        qrl.write_iterations_csv(agg, out / f"iterations_gamma0_{_gamma_tag(g0)}.csv")
    return {"qrl_master_seed": cfg.master_seed}


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(x if isinstance(x, str) else repr(x) for x in row) + "\n")


def _run_lindblad_steady(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    if p["reservoir"] == "thermal":
        model = lindblad.two_qubit_thermal_model(p["nbar"], p["gamma"])
    else:
        model = lindblad.squeezed_reservoir_model(p["r"], p["psi"], p["gamma"])
    spectrum = lindblad.liouvillian_spectrum(model)
    ss_map = lindblad.steady_state_map(model)
    choi = ss_map.choi_spectrum()
    cp = ss_map.is_completely_positive()
    kernel = lindblad.steady_states(model)

    _write_rows(out / "liouvillian_spectrum.csv", ("index", "re", "im"),
                [(i, float(z.real), float(z.imag)) for i, z in enumerate(spectrum)])
    _write_rows(out / "choi_spectrum.csv", ("index", "eigenvalue"),
                [(i, float(v)) for i, v in enumerate(choi)])

    rng = np.random.default_rng(cfg.master_seed)
    rows = []
    for i in range(p["n_random_states"]):
        rho0 = qcore.random_density(4, rng)
        limit = ss_map(rho0)
        late = lindblad.evolve(model, rho0, p["check_time"] / p["gamma"])
        rows.append((i, float(qcore.trace_distance(limit, late))))
    _write_rows(out / "convergence.csv", ("sample", "trace_distance"), rows)

    summary = {
        "kernel_dimension": len(kernel),
        "completely_positive": bool(cp),
        "max_trace_distance": max((r[1] for r in rows), default=0.0),
    }
    if cp:
        summary["kraus"] = [
            {"re": k.real.tolist(), "im": k.imag.tolist()} for k in ss_map.to_kraus().kraus_ops
        ]
    (out / "steady_state.json").write_text(json.dumps(summary, indent=2) + "\n")
    return {"random_state_seed": cfg.master_seed}


def _run_classify(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    if p["dataset_csv"]:
        records = classify.read_dataset_csv(p["dataset_csv"])
    else:
        records = classify.synthetic_dataset(p["n_records"], seed=p["data_seed"])
    labelled = [r for r in records if r.label is not None]
    unlabelled = [r for r in records if r.label is None]
    train, test = classify.train_test_split(labelled, p["test_fraction"], seed=p["split_seed"])
    grid = []
    if p["reservoir"] in ("thermal", "both"):
        grid += classify.thermal_grid(p["grid_step"])
    if p["reservoir"] in ("squeezed", "both"):
        grid += classify.squeezed_grid(p["grid_step"])
    model = classify.fit(train, grid, workers=threads)
    (out / "model.json").write_text(model.to_json() + "\n")

    rows = []
    for split, recs in (("train", train), ("test", test), ("unlabelled", unlabelled)):
        for r in recs:
            label = "" if r.label is None else str(r.label)
            rows.append((split, *r.features, label, str(classify.predict(model, r))))
    _write_rows(out / "predictions.csv", ("split", "f1", "f2", "f3", "f4", "label", "predicted"), rows)
    metrics = [("train", classify.accuracy(model, train), len(train))]
    if test:
        metrics.append(("test", classify.accuracy(model, test), len(test)))
    _write_rows(out / "metrics.csv", ("split", "accuracy", "n_records"), metrics)
    return {"data_seed": p["data_seed"], "split_seed": p["split_seed"]}


def _run_qrc(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    if p["dataset_csv"]:
        ds = qrc.read_dataset_csv(p["dataset_csv"])
    else:
        ds = qrc.synthetic_dataset(p["n_qubits"], p["n_samples"], p["data_seed"])
    grid = [("none", 0.0)] + [(kind, float(x)) for kind in p["noise_kinds"] for x in p["p_values"]]
    rows = qrc.run_experiment(ds, grid, lam=p["lambda"], split_seed=p["split_seed"],
                              circuit_seed=p["circuit_seed"], n_gates=p["n_gates"],
                              test_fraction=p["test_fraction"], workers=threads)
    qrc.write_metrics_csv(rows, out / "metrics.csv")
    qrc.write_dataset_csv(ds, out / "dataset.csv")
    return {"data_seed": p["data_seed"], "circuit_seed": p["circuit_seed"], "split_seed": p["split_seed"]}


RUNNERS = {
    "qrl_sweep": _run_qrl_sweep,
    "qrl_iterations": _run_qrl_iterations,
    "lindblad_steady": _run_lindblad_steady,
    "classify": _run_classify,
    "qrc": _run_qrc,
}


def run(cfg: ExperimentConfig, threads: int = 1) -> int:
    """Run the experiment and write its artifacts plus ``manifest.json``.

    Returns the process exit status. On failure nothing is left behind in
    ``cfg.output_dir`` (a directory created for this run is removed again).
    """
    out = Path(cfg.output_dir)
    created = not out.exists()
    staging = None
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
        seeds = RUNNERS[cfg.experiment](cfg, staging, threads)
        outputs = sorted(f.name for f in staging.iterdir())
        manifest = {
            "config": cfg.to_dict(),
            "seeds": {"master_seed": cfg.master_seed, **seeds},
            "library_version": __version__,
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "python_version": platform.python_version(),
            "threads": threads,
            "started_utc": started.isoformat(timespec="seconds"),
            "wall_clock_seconds": round(time.perf_counter() - t0, 3),
            "outputs": outputs,
        }
        (staging / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        for name in outputs + ["manifest.json"]:
            os.replace(staging / name, out / name)
        staging.rmdir()
    except Exception as exc:  # any module error becomes exit 3
        log.error("run failed: %s: %s", type(exc).__name__, exc)
        if staging is not None:
            shutil.rmtree(staging, ignore_errors=True)
        if created:
            shutil.rmtree(out, ignore_errors=True)
        return EXIT_RUNTIME
    log.info("wrote %d files to %s in %.1f s", len(outputs) + 1, out, time.perf_counter() - t0)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dissipative-qml",
        description="Run dissipative quantum machine learning experiments from a JSON config.",
        epilog=(
            "exit status: 0 success, 2 config error, 3 runtime error\n"
            f"threads default to ${THREADS_ENV} (else 1) when --threads is absent\n\n"
            "config parameters and defaults (top level: experiment, output_dir, master_seed, params):\n"
            + describe_schema()
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment")
    p_run.add_argument("config", help="path to the JSON config")
    p_run.add_argument("--out", help="override output_dir")
    p_run.add_argument("--seed", type=int, help="override master_seed (unsigned 64-bit)")
    p_run.add_argument("--threads", type=int, help="worker threads")
    p_val = sub.add_parser("validate", help="check a config and print it with defaults filled")
    p_val.add_argument("config", help="path to the JSON config")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_CONFIG
    try:
        if args.command == "validate":
            cfg = parse_config(text)
            print(json.dumps(cfg.to_dict(), indent=2))
            return EXIT_OK
        cfg = load_config(text, args.out, args.seed)
        threads = resolve_threads(args.threads)
    except ConfigError as exc:
        for err in exc.errors:
            log.error("config: %s", err)
        return EXIT_CONFIG
    return run(cfg, threads)


if __name__ == "__main__":
    sys.exit(main())
