"""Command-line harness: ``cita extract | evaluate | perturb | sweep | synth``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data validation error.
Option precedence is command-line flag, then ``--config`` JSON file, then the
built-in defaults (nu=1, gamma=0.05, 158 iterations, k=10, seed=0,
shrinkage=0, one thread).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import datasets, synthetic
from .ca import CitaParams
from .classify import evaluate
from .datasets import PerturbationSpec, atomic_write_bytes, read_manifest, split_protocol
from .descriptor import default_params, sweep
from .errors import DatasetIOError, InvalidInputError
from .features import (
    METHOD_IDS,
    FeatureMatrix,
    compute_features,
    read_feature_matrix,
    write_feature_matrix,
)

log = logging.getLogger("cita")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3

DEFAULT_GAMMAS = tuple(round(0.01 * i, 2) for i in range(1, 9))
DEFAULT_NUS = tuple(range(11))

_BASE = default_params()
DEFAULTS = {
    "method": "cita",
    "nu": _BASE.nu,
    "gamma": _BASE.gamma,
    "iterations": _BASE.iterations,
    "k": 10,
    "seed": 0,
    "shrinkage": 0.0,
    "threads": 1,
    "out": "out",
    "mode": None,
    "l": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    manifest: Path | None = None
    method: str = "cita"
    params: CitaParams = field(default_factory=default_params)
    k: int = 10
    seed: int = 0
    shrinkage: float = 0.0
    out: Path = Path("out")
    threads: int = 1
    extra: dict = field(default_factory=dict)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(p: argparse.ArgumentParser, params: bool = True) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", type=Path, default=S, help="JSON file with option defaults")
    p.add_argument("--manifest", type=Path, default=S)
    p.add_argument("--out", type=Path, default=S, help="output directory (default: out)")
    p.add_argument("--threads", type=int, default=S)
    if params:
        p.add_argument("--method", choices=METHOD_IDS, default=S)
        p.add_argument("--nu", type=int, default=S)
        p.add_argument("--gamma", type=float, default=S)
        p.add_argument("--iterations", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="cita", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("extract", help="write a feature matrix for a manifest")
    _common(p)

    p = sub.add_parser("evaluate", help="LDA with stratified k-fold cross-validation")
    _common(p)
    p.add_argument("--features", type=Path, default=S, help="feature CSV from 'extract'")
    p.add_argument("--noisy-manifest", type=Path, default=S, help="perturbed counterpart of --manifest")
    p.add_argument("--mode", choices=("both_noisy", "train_clean_test_noisy"), default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--shrinkage", type=float, default=S)
    p.add_argument("--dataset", default=S, help="dataset name for the summary line")

    p = sub.add_parser("perturb", help="build a noisy or rotated variant corpus")
    p.add_argument("kind", choices=("noise", "rotate"))
    _common(p, params=False)
    p.add_argument("--l", type=float, default=S, help="salt-and-pepper intensity in [0, 1]")
    p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("sweep", help="grid search over gamma and nu")
    _common(p, params=False)
    p.add_argument("--gamma", type=_float_list, default=S, help="comma list (default 0.01..0.08)")
    p.add_argument("--nu", type=_int_list, default=S, help="comma list (default 0..10)")
    p.add_argument("--iterations", type=int, default=S, help="iteration budget (default 158)")
    p.add_argument("--stride", type=int, default=S, help="score every n-th prefix length")
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--shrinkage", type=float, default=S)

    p = sub.add_parser("synth", help="write the procedural texture corpus")
    p.add_argument("--config", type=Path, default=S)
    p.add_argument("--out", type=Path, default=S)
    p.add_argument("--per-class", type=int, default=S)
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    return parser


def _merged_options(ns: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if ns.command == "sweep":
        opts.update(gamma=list(DEFAULT_GAMMAS), nu=list(DEFAULT_NUS), stride=1)
    if ns.command == "synth":
        opts.update(per_class=10, size=64)
    given = vars(ns)
    if "config" in given:
        try:
            cfg = json.loads(Path(given["config"]).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DatasetIOError(given["config"], exc.strerror or str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {given['config']}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    opts.update(given)
    return opts


def _config(opts: dict) -> RunConfig:
    if opts["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    if opts.get("k", 10) < 2:
        raise UsageError("--k must be >= 2")
    if not 0.0 <= opts.get("shrinkage", 0.0) <= 1.0:
        raise UsageError("--shrinkage must lie in [0, 1]")
    level = opts.get("l")
    if level is not None and not 0.0 <= level <= 1.0:
        raise UsageError(f"--l must lie in [0, 1], got {level}")
    params = None
    if opts["command"] in ("extract", "evaluate"):
        try:
            params = CitaParams(nu=opts["nu"], gamma=opts["gamma"], iterations=opts["iterations"])
        except InvalidInputError as exc:
            raise UsageError(str(exc)) from exc
    manifest = opts.get("manifest")
    if manifest is None and opts["command"] in ("extract", "perturb", "sweep"):
        raise UsageError(f"{opts['command']} needs --manifest")
    if manifest is not None:
        manifest = Path(manifest)
        if not manifest.is_file():
            raise DatasetIOError(manifest, "manifest not found")
    known = {"command", "manifest", "method", "k", "seed", "shrinkage", "out", "threads"}
    return RunConfig(
        command=opts["command"],
        manifest=manifest,
        method=opts["method"],
        params=params or default_params(),
        k=int(opts["k"]),
        seed=int(opts["seed"]),
        shrinkage=float(opts["shrinkage"]),
        out=Path(opts["out"]),
        threads=int(opts["threads"]),
        extra={k: v for k, v in opts.items() if k not in known},
    )


def _method_meta(cfg: RunConfig) -> dict:
    meta = {"method": cfg.method}
    if cfg.method == "cita":
        meta["params"] = cfg.params.as_dict()
    return meta


def _load(manifest_path: Path, threads: int, min_classes: int = 0):
    manifest = read_manifest(manifest_path)
    if len(manifest) == 0:
        raise InvalidInputError(f"{manifest_path}: manifest is empty")
    manifest.validate(min_classes=min_classes)
    return manifest, datasets.load_images(manifest, threads)


def cmd_extract(cfg: RunConfig) -> int:
    manifest, images = _load(cfg.manifest, cfg.threads)
    values = compute_features(images, cfg.method, cfg.params, cfg.threads)
    meta = _method_meta(cfg)
    meta["manifest"] = str(cfg.manifest)
    meta["dataset"] = manifest.name
    fm = FeatureMatrix(manifest.ids, manifest.labels, values, meta)
    csv_path, side = write_feature_matrix(fm, cfg.out / "features.csv")
    print(csv_path)
    return EXIT_OK


def _summary_csv(report, method: str, dataset: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "dataset", "mean", "std", "k", "seed"])
    w.writerow(report.summary_row(method, dataset))
    return buf.getvalue()


def cmd_evaluate(cfg: RunConfig) -> int:
    features_path = cfg.extra.get("features")
    noisy_path = cfg.extra.get("noisy_manifest")
    mode = cfg.extra.get("mode")
    test_values = None
    method = cfg.method
    if features_path is not None:
        if cfg.manifest is not None or noisy_path is not None:
            raise UsageError("--features cannot be combined with --manifest/--noisy-manifest")
        fm = read_feature_matrix(features_path)
        labels, values = fm.labels, fm.values
        method = fm.meta.get("method", method)
        dataset = cfg.extra.get("dataset") or fm.meta.get("dataset") or Path(features_path).parent.name
        source = {"features": str(features_path)}
    elif cfg.manifest is not None:
        clean = read_manifest(cfg.manifest)
        if len(clean) == 0:
            raise InvalidInputError(f"{cfg.manifest}: manifest is empty")
        clean.validate(min_classes=2)
        source = {"manifest": str(cfg.manifest)}
        if noisy_path is not None or mode is not None:
            if noisy_path is None or mode is None:
                raise UsageError("--noisy-manifest and --mode must be given together")
            noisy = read_manifest(noisy_path)
            split = split_protocol(clean, noisy, mode)
            train_imgs = datasets.load_images(split.train, cfg.threads)
            values = compute_features(train_imgs, method, cfg.params, cfg.threads)
            if mode == "train_clean_test_noisy":
                test_imgs = datasets.load_images(split.test, cfg.threads)
                test_values = compute_features(test_imgs, method, cfg.params, cfg.threads)
            labels = split.train.labels
            source.update(noisy_manifest=str(noisy_path), mode=mode)
        else:
            images = datasets.load_images(clean, cfg.threads)
            values = compute_features(images, method, cfg.params, cfg.threads)
            labels = clean.labels
        dataset = cfg.extra.get("dataset") or clean.name
    else:
        raise UsageError("evaluate needs --features or --manifest")

    if len(set(labels)) < 2:
        raise InvalidInputError("evaluation needs at least two classes")
    report = evaluate(values, labels, cfg.k, cfg.seed, cfg.shrinkage, test_features=test_values, threads=cfg.threads)
    meta = {"method": method, "dataset": dataset, **source}
    if method == "cita" and features_path is None:
        meta["params"] = cfg.params.as_dict()
    atomic_write_bytes(cfg.out / "report.json", report.to_json(**meta).encode("utf-8"))
    atomic_write_bytes(cfg.out / "summary.csv", _summary_csv(report, method, dataset).encode("utf-8"))
    print(f"{method} {dataset}: {report.mean:.2f}% (std {report.std:.2f}) over {len(report.fold_rates)} folds")
    return EXIT_OK


def cmd_perturb(cfg: RunConfig) -> int:
    kind = cfg.extra["kind"]
    manifest = read_manifest(cfg.manifest)
    if len(manifest) == 0:
        raise InvalidInputError(f"{cfg.manifest}: manifest is empty")
    if kind == "noise":
        level = cfg.extra.get("l")
        if level is None:
            raise UsageError("perturb noise needs --l")
        spec = PerturbationSpec("salt_pepper", intensity=level, seed=cfg.seed)
    else:
        spec = PerturbationSpec("rotation")
    if (cfg.out / "manifest.csv").resolve() == cfg.manifest.resolve():
        raise UsageError("--out would overwrite the source manifest")
    datasets.build_variant(manifest, spec, cfg.out, cfg.threads)
    print(cfg.out / "manifest.csv")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    gammas, nus = cfg.extra["gamma"], cfg.extra["nu"]
    if isinstance(gammas, (int, float)):
        gammas = [gammas]
    if isinstance(nus, int):
        nus = [nus]
    budget = int(cfg.extra["iterations"])
    stride = int(cfg.extra.get("stride", 1))
    if budget < 1 or stride < 1:
        raise UsageError("--iterations and --stride must be >= 1")
    for g in gammas:
        if not 0.0 <= g <= 1.0:
            raise UsageError(f"gamma {g} outside [0, 1]")
    for n in nus:
        if n < 0:
            raise UsageError(f"nu {n} is negative")
    manifest, images = _load(cfg.manifest, cfg.threads, min_classes=2)
    scan = sorted(set(range(stride, budget + 1, stride)) | {budget})

    def evaluator(x, y):
        return evaluate(x, y, cfg.k, cfg.seed, cfg.shrinkage).mean

    result = sweep(images, manifest.labels, gammas, nus, budget, evaluator, scan, cfg.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "nu", "best_rate", "argmax_iteration"])
    for g, nu, rate, it in result.rows():
        w.writerow([repr(g), nu, repr(rate), it])
    path = cfg.out / "sweep.csv"
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
    print(path)
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    per_class, size = int(cfg.extra["per_class"]), int(cfg.extra["size"])
    if per_class < 1 or size < 8:
        raise UsageError("--per-class must be >= 1 and --size >= 8")
    synthetic.write_corpus(cfg.out, per_class=per_class, size=size, seed=cfg.seed)
    print(cfg.out / "manifest.csv")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "evaluate": cmd_evaluate,
    "perturb": cmd_perturb,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if ns.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        cfg = _config(_merged_options(ns))
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetIOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidInputError as exc:
        print(f"invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
