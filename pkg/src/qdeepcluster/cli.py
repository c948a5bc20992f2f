"""``qdc`` command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 configuration or input error.
Failures print one line to stderr: ``error code=<Name> message=<json string>``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .allpair import classify_all_pairs, train_multiclass
from .cost_model import CostParams, cost_report, read_sweep, sweep_to_csv
from .datasets import make_blobs, read_dataset, write_dataset
from .errors import ConfigError, NumericalError, QDCError
from .lssvm import KernelSpec
from .pipeline import PipelineConfig, initial_seeds, run_pipeline, write_artifacts
from .qkmeans import AnnealParams, lloyd_classical, qkmeans_run
from .qsvm import InversionMode
from .serialization import write_json
from .statevector import ShotPlan, fidelity

SCHEMA = 1
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


class CLIError(Exception):
    def __init__(self, code: str, message: str, exit_code: int):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _fail(code: str, message: str, exit_code: int = EXIT_CONFIG):
    raise CLIError(code, message, exit_code)


def _check_keys(d: dict, allowed: set, section: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{section} must be a JSON object")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown {section} keys {sorted(extra)}")


def _load_config(path: Optional[str]) -> tuple[dict, Path]:
    if path is None:
        return {}, Path.cwd()
    p = Path(path)
    try:
        cfg = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg.pop("schema", None)
    return cfg, p.resolve().parent


def _resolve(base: Path, rel) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base / p


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:12]


def _plan(cfg: dict, seed: int) -> ShotPlan:
    return ShotPlan(shots=int(cfg.get("shots", 1024)), seed=int(seed), mode=cfg.get("mode", "exact"))


def _apply_overrides(cfg: dict, args, seed_key: str = "seed") -> dict:
    cfg = dict(cfg)
    if args.seed is not None:
        cfg[seed_key] = args.seed
    if args.mode is not None:
        cfg["mode"] = args.mode
    if args.shots is not None:
        cfg["shots"] = args.shots
    return cfg


def _prepare_run_dir(out: Optional[str], name: str, resolved: dict, data_path: Optional[Path]) -> Path:
    run_dir = Path(out or "runs") / name
    run_dir.mkdir(parents=True, exist_ok=True)
    if data_path is not None:
        shutil.copyfile(data_path, run_dir / "data.csv")
        resolved = dict(resolved, data="data.csv")
    write_json(run_dir / "config.json", dict(resolved, schema=SCHEMA))
    return run_dir


# generate

def cmd_generate(args) -> int:
    if args.k < 1 or args.per_blob < 1 or args.dim < 1:
        _fail("BadArguments", "--k, --per-blob and --dim must be positive")
    if not args.std > 0 or args.separation < 0:
        _fail("BadArguments", "--std must be positive and --separation non-negative")
    if not 0 <= args.seed < 2 ** 64:
        _fail("BadArguments", "--seed must be a 64-bit unsigned integer")
    X, labels = make_blobs(args.k, args.per_blob, args.dim, args.std, args.separation, args.seed)
    out = Path(args.out or "blobs.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(out, X, labels)
    return 0


# train-svm

SVM_KEYS = {"data", "test_data", "kernel", "eta", "eps_k", "inversion", "quantum", "seed", "mode", "shots", "oracle"}


def cmd_train_svm(args) -> int:
    cfg, base = _load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    _check_keys(cfg, SVM_KEYS, "train-svm")
    if "data" not in cfg:
        raise ConfigError("train-svm needs a 'data' path")
    kernel = KernelSpec.from_dict(cfg.get("kernel", {"kind": "linear"}))
    mode = InversionMode.from_dict(cfg.get("inversion", {"kind": "exact_spectral"}))
    eta = float(cfg.get("eta", 1.0))
    eps_k = cfg.get("eps_k")
    seed = int(cfg.get("seed", 0))
    plan = _plan(cfg, seed)
    oracle = bool(cfg.get("oracle", True))
    data_path = _resolve(base, cfg["data"])
    X, y = read_dataset(data_path)
    if y is None:
        raise ConfigError("train-svm needs a labelled dataset")
    test = None
    if cfg.get("test_data"):
        test = read_dataset(_resolve(base, cfg["test_data"]))

    model = train_multiclass(X, y, kernel, eta, eps_k, mode, quantum=bool(cfg.get("quantum", True)))
    classical = train_multiclass(X, y, kernel, eta, quantum=False)
    fids = []
    for qb, cb in zip(model.binaries, classical.binaries):
        qv = np.concatenate([[qb.b], qb.alpha])
        cv = np.concatenate([[cb.b], cb.alpha])
        fids.append(fidelity(qv / np.linalg.norm(qv), cv / np.linalg.norm(cv)))
    pred = np.array([classify_all_pairs(model, x, plan, oracle) for x in X])
    report = {
        "schema": SCHEMA,
        "g": model.g,
        "pairs": [list(p) for p in model.pairs],
        "fidelity": fids,
        "min_fidelity": min(fids),
        "train_accuracy": float(np.mean(pred == y)),
        "models": [
            {"class_pair": list(b.class_pair), "b": float(b.b), "alpha": [float(a) for a in b.alpha]}
            for b in model.binaries
        ],
    }
    if test is not None:
        Xt, yt = test
        tp = np.array([classify_all_pairs(model, x, plan, oracle) for x in Xt])
        report["test_predictions"] = tp.tolist()
        if yt is not None:
            report["test_accuracy"] = float(np.mean(tp == yt))
    resolved = dict(cfg, seed=seed, kernel=kernel.to_dict(), inversion=mode.to_dict(), eta=eta)
    run_dir = _prepare_run_dir(args.out, f"train-svm-{_digest(resolved)}-seed{seed}", resolved, data_path)
    if "test_data" in cfg:
        shutil.copyfile(_resolve(base, cfg["test_data"]), run_dir / "test_data.csv")
        write_json(run_dir / "config.json", dict(resolved, data="data.csv", test_data="test_data.csv", schema=SCHEMA))
    write_json(run_dir / "report.json", report)
    return 0


# cluster

CLUSTER_KEYS = {"data", "K", "iters", "anneal", "copies", "seeds", "seed", "mode", "shots"}


def cmd_cluster(args) -> int:
    cfg, base = _load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    _check_keys(cfg, CLUSTER_KEYS, "cluster")
    if "data" not in cfg or "K" not in cfg:
        raise ConfigError("cluster needs 'data' and 'K'")
    anneal_cfg = cfg.get("anneal", {})
    _check_keys(anneal_cfg, {"t_anneal", "steps", "normalize"}, "anneal")
    anneal = AnnealParams(**anneal_cfg)
    K = int(cfg["K"])
    iters = int(cfg.get("iters", 100))
    copies = int(cfg.get("copies", 1))
    seed = int(cfg.get("seed", 0))
    plan = _plan(cfg, seed)
    data_path = _resolve(base, cfg["data"])
    X, truth = read_dataset(data_path)
    seeds = np.asarray(cfg["seeds"], dtype=np.int64) if "seeds" in cfg else initial_seeds(X, K, seed)

    result, state = qkmeans_run(X, K, seeds, iters, plan, anneal, copies)
    lloyd = lloyd_classical(X, K, seeds, iters)
    report = {
        "schema": SCHEMA,
        "seeds": seeds.tolist(),
        "cluster": result.to_dict(),
        "lloyd_objective": lloyd.objective,
        "lloyd_agreement": float(np.mean(lloyd.assignments == result.assignments)),
        "cluster_marginal": state.cluster_marginal().tolist(),
    }
    if truth is not None:
        report["purity"] = metrics.purity(result.assignments, truth)
        report["nmi"] = metrics.nmi(result.assignments, truth)
    resolved = dict(
        cfg, seed=seed, K=K, iters=iters, copies=copies, seeds=seeds.tolist(),
        anneal={"t_anneal": anneal.t_anneal, "steps": anneal.steps, "normalize": anneal.normalize},
    )
    run_dir = _prepare_run_dir(args.out, f"cluster-{_digest(resolved)}-seed{seed}", resolved, data_path)
    write_json(run_dir / "report.json", report)
    return 0


# deep-cluster

def cmd_deep_cluster(args) -> int:
    cfg, base = _load_config(args.config)
    cfg = _apply_overrides(cfg, args, seed_key="master_seed")
    if "data" not in cfg:
        raise ConfigError("deep-cluster needs a 'data' path")
    data_path = _resolve(base, cfg.pop("data"))
    config = PipelineConfig.from_dict(cfg)
    X, truth = read_dataset(data_path)
    result = run_pipeline(config, X, truth)
    run_dir = Path(args.out or "runs") / f"deep-cluster-{config.digest()}-seed{config.master_seed}"
    write_artifacts(result, run_dir)
    shutil.copyfile(data_path, run_dir / "data.csv")
    write_json(run_dir / "config.json", dict(config.to_dict(), data="data.csv"))
    return 0


# cost

COST_KEYS = {"sweep", "params", "seed", "mode", "shots"}


def cmd_cost(args) -> int:
    cfg, base = _load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    _check_keys(cfg, COST_KEYS, "cost")
    sweep_path = None
    if "sweep" in cfg:
        sweep_path = _resolve(base, cfg["sweep"])
        params = read_sweep(sweep_path)
    elif "params" in cfg:
        entries = cfg["params"] if isinstance(cfg["params"], list) else [cfg["params"]]
        params = [CostParams.from_row(e) for e in entries]
    else:
        raise ConfigError("cost needs 'sweep' (CSV path) or 'params'")
    reports = [cost_report(p) for p in params]
    resolved = {k: v for k, v in cfg.items() if k not in ("seed", "mode", "shots")}
    run_dir = Path(args.out or "runs") / f"cost-{_digest(resolved)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    if sweep_path is not None:
        shutil.copyfile(sweep_path, run_dir / "sweep.csv")
        resolved["sweep"] = "sweep.csv"
    write_json(run_dir / "config.json", dict(resolved, schema=SCHEMA))
    (run_dir / "report.csv").write_text(sweep_to_csv(reports))
    write_json(run_dir / "report.json", {"schema": SCHEMA, "rows": [r.to_dict() for r in reports]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdc", description="Quantum deep clustering simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a Gaussian-blob dataset CSV")
    gen.add_argument("--k", type=int, default=3)
    gen.add_argument("--per-blob", type=int, default=20)
    gen.add_argument("--dim", type=int, default=8)
    gen.add_argument("--std", type=float, default=1.0)
    gen.add_argument("--separation", type=float, default=6.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output CSV path (default blobs.csv)")
    gen.set_defaults(func=cmd_generate)

    for name, func, helptext in (
        ("train-svm", cmd_train_svm, "train a quantum all-pair LS-SVM"),
        ("cluster", cmd_cluster, "run quantum K-Means"),
        ("deep-cluster", cmd_deep_cluster, "run the full deep clustering loop"),
        ("cost", cmd_cost, "evaluate the run-time cost model"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--mode", choices=("exact", "sampled"))
        p.add_argument("--out", help="parent directory for the run directory (default runs)")
        p.add_argument("--shots", type=int)
        p.set_defaults(func=func)
    return parser


def _report_error(code: str, message: str) -> None:
    print(f"error code={code} message={json.dumps(message)}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            _report_error("BadArguments", "invalid command-line arguments")
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CLIError as exc:
        _report_error(exc.code, str(exc))
        return exc.exit_code
    except NumericalError as exc:
        _report_error(exc.code, str(exc))
        return EXIT_NUMERICAL
    except QDCError as exc:
        _report_error(exc.code, str(exc))
        return EXIT_CONFIG
    except (ValueError, TypeError, KeyError) as exc:
        _report_error("ConfigError", f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
