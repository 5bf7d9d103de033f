"""Command-line harness for reproducible friction-identification runs.

Subcommands: ``synth`` (generate a dataset), ``fit`` (identify a friction
model), ``eval`` (score a model on a dataset), ``adapt`` (additive residual
correction), ``external`` (external-torque estimation).  Every run writes a
manifest with content digests of its inputs; reports are byte-identical
across reruns with the same inputs and seed (only the manifest carries a
timestamp).

Exit codes: 0 success, 2 input/spec error, 3 fitting failure, 4 model/data
mismatch.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import baseline as bl
from . import data as dt
from . import expr as ex
from . import gp as gp_engine
from . import models as md
from . import parfam as pf
from ._version import __version__
from .errors import FitError, InputError, MismatchError
from .util import max_threads, read_json, sha256_file, write_json

FIT_METHODS = ("baseline-sym", "baseline-asym", "gp", "parfam")


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class MetricsRow:
    method: str
    split: str
    mae: float
    mse: float
    complexity: int
    formula: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "split": self.split,
            "mae": self.mae,
            "mse": self.mse,
            "complexity": self.complexity,
            "formula": self.formula,
        }


@dataclass(frozen=True)
class MetricsReport:
    dataset: str
    rows: tuple[MetricsRow, ...]

    def __post_init__(self):
        for row in self.rows:
            if row.mae < 0 or row.mse < 0:
                raise ValueError("MAE and MSE must be non-negative")

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "rows": [r.to_dict() for r in self.rows]}

    def text_table(self) -> str:
        headers = ("Method", "Split", "MAE [Nm]", "MSE", "Complexity [-]", "Formula")
        cells = [
            (
                r.method,
                r.split,
                format(r.mae, ".6g"),
                format(r.mse, ".6g"),
                str(r.complexity),
                r.formula,
            )
            for r in self.rows
        ]
        widths = [
            max(len(headers[j]), *(len(c[j]) for c in cells)) if cells else len(headers[j])
            for j in range(len(headers))
        ]
        def line(values):
            return "  ".join(v.ljust(w) for v, w in zip(values, widths)).rstrip()
        out = [f"dataset: {self.dataset}", line(headers), line("-" * w for w in widths)]
        out.extend(line(c) for c in cells)
        return "\n".join(out) + "\n"


def _metrics_row(method: str, split: str, model, y_true, y_pred) -> MetricsRow:
    err = np.asarray(y_pred) - np.asarray(y_true)
    return MetricsRow(
        method=method,
        split=split,
        mae=float(np.mean(np.abs(err))),
        mse=float(np.mean(err * err)),
        complexity=model.complexity,
        formula=model.formula,
    )


def _write_report(out_dir: Path, report: MetricsReport) -> list[str]:
    write_json(out_dir / "report.json", report.to_dict())
    (out_dir / "report.txt").write_text(report.text_table(), encoding="utf-8")
    return ["report.json", "report.txt"]


def _write_manifest(
    out_dir: Path,
    command: str,
    inputs: list[Path],
    outputs: list[str],
    seed: int | None,
    config: dict,
) -> None:
    digests = {}
    for p in inputs:
        digests[p.name] = sha256_file(p)
        meta = Path(str(p) + ".meta.json")
        if meta.exists():
            digests[meta.name] = sha256_file(meta)
    write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "version": __version__,
            "seed": seed,
            "threads": max_threads(),
            "inputs": digests,
            "outputs": sorted(outputs),
            "config": config,
            "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        },
    )


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_samples_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> None:
    spec = dt.SynthSpec.from_dict(read_json(args.spec))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    ds = dt.synth_generate(spec)
    out = _out_dir(args)
    dt.save_csv(ds, out / "dataset.csv")
    _write_manifest(
        out,
        "synth",
        [Path(args.spec)],
        ["dataset.csv", "dataset.csv.meta.json"],
        spec.seed,
        spec.to_dict(),
    )
    print(f"wrote {out / 'dataset.csv'} ({len(ds)} samples)")


def _train_test(ds: dt.JointDataset, config: dict, seed: int):
    if ds.movement is None or np.unique(ds.movement).size < 2:
        return ds, ds
    n_movements = int(np.unique(ds.movement).size)
    n_train = int(config.get("n_train", max(1, round(0.8 * n_movements))))
    return dt.split_movements(ds, n_train, seed)


def cmd_fit(args) -> None:
    ds = dt.load_csv(args.data)
    config = read_json(args.config) if args.config else {}
    if not isinstance(config, dict):
        raise InputError("--config must hold a JSON object")
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    train, test = _train_test(ds, config, seed)
    dt.check_quasistatic(train)

    method = args.method
    extra_outputs: list[str] = []
    out = _out_dir(args)

    if method in ("baseline-sym", "baseline-asym"):
        features = ("qdot",)
        cfg = bl.BaselineFitConfig.from_dict({**config.get("baseline", {}), "seed": seed})
        y_train = dt.friction_target(train)
        if method == "baseline-sym":
            params, _ = bl.fit_symmetric(train.qdot, y_train, cfg)
            model = md.SymmetricStribeckModel(params)
        else:
            branches, _ = bl.fit_asymmetric(train.qdot, y_train, cfg)
            model = md.AsymmetricStribeckModel(branches)
    elif method == "gp":
        features = dt.normalize_features(args.features) if args.features else dt.FEATURES
        X, y = dt.design_matrix(train, features)
        cfg = gp_engine.GpConfig.from_dict({**config.get("gp", {}), "seed": seed})
        archive = gp_engine.evolve(X, y, cfg)
        if not len(archive):
            raise FitError("evolution produced no finite-loss formula")
        model = md.ExprModel(archive.best().expr, features)
        write_json(out / "pareto.json", archive.to_json())
        extra_outputs.append("pareto.json")
    elif method == "parfam":
        features = dt.normalize_features(args.features) if args.features else dt.FEATURES
        X, y = dt.design_matrix(train, features)
        if "structure" in config:
            structure = pf.ParFamStructure.from_dict(config["structure"])
            if structure.arity != len(features):
                raise MismatchError(
                    f"structure arity {structure.arity} does not match "
                    f"{len(features)} features"
                )
        else:
            structure = pf.default_friction_structure(len(features))
        cfg = pf.ParFamFitConfig.from_dict({**config.get("parfam", {}), "seed": seed})
        theta, fit_report = pf.parfam_fit(X, y, structure, cfg)
        if not np.isfinite(fit_report.mse):
            raise FitError("continuous fit diverged")
        model = md.ExprModel(ex.simplify(pf.parfam_extract(structure, theta)), features)
        write_json(
            out / "theta.json",
            {"structure": structure.to_dict(), "theta": [float(v) for v in theta]},
        )
        extra_outputs.append("theta.json")
    else:
        raise InputError(f"unknown method {method!r}; choose from {FIT_METHODS}")

    rows = [
        _metrics_row(method, "train", model, dt.friction_target(train), model.predict(train)),
        _metrics_row(method, "test", model, dt.friction_target(test), model.predict(test)),
    ]
    report = MetricsReport(dataset=Path(args.data).name, rows=tuple(rows))
    md.save_model(model, out / "model.json")
    outputs = ["model.json"] + extra_outputs + _write_report(out, report)
    _write_manifest(out, "fit", [Path(args.data)], outputs, seed,
                    {"method": method, "features": list(features), **config})
    test_row = rows[1]
    print(
        f"{method}: test MAE {test_row.mae:.6g} Nm, "
        f"complexity {test_row.complexity}, formula {test_row.formula}"
    )


def cmd_eval(args) -> None:
    model = md.load_model(args.model)
    ds = dt.load_csv(args.data)
    y = dt.friction_target(ds)
    pred = model.predict(ds)
    out = _out_dir(args)
    _write_samples_csv(
        out / "predictions.csv",
        ["t", "tau_f", "tau_f_hat", "error"],
        [ds.t, y, pred, pred - y],
    )
    kind = model.to_dict()["kind"]
    report = MetricsReport(
        dataset=Path(args.data).name,
        rows=(_metrics_row(kind, "eval", model, y, pred),),
    )
    outputs = ["predictions.csv"] + _write_report(out, report)
    _write_manifest(out, "eval", [Path(args.data), Path(args.model)], outputs, None, {})
    print(f"{kind}: MAE {report.rows[0].mae:.6g} Nm on {len(ds)} samples")


def cmd_adapt(args) -> None:
    base = md.load_model(args.model)
    ds = dt.load_csv(args.data)
    config = read_json(args.config) if args.config else {}
    if not isinstance(config, dict):
        raise InputError("--config must hold a JSON object")
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    engine = args.method or "parfam"
    if engine not in ("gp", "parfam"):
        raise InputError(f"adaptation engine must be gp or parfam, got {engine!r}")
    features = dt.normalize_features(args.features) if args.features else dt.ADAPT_FEATURES

    kwargs = {}
    if "gp" in config:
        kwargs["gp_config"] = gp_engine.GpConfig.from_dict({**config["gp"], "seed": seed})
    if "parfam" in config:
        kwargs["parfam_config"] = pf.ParFamFitConfig.from_dict(
            {**config["parfam"], "seed": seed}
        )
    if "structure" in config:
        kwargs["structure"] = pf.ParFamStructure.from_dict(config["structure"])

    combined, info = md.adapt_residual(base, ds, engine=engine, features=features,
                                       seed=seed, **kwargs)
    y = dt.friction_target(ds)
    rows = (
        _metrics_row(f"base:{base.to_dict()['kind']}", "adapt", base, y, base.predict(ds)),
        _metrics_row(f"adapted:{engine}", "adapt", combined, y, combined.predict(ds)),
    )
    report = MetricsReport(dataset=Path(args.data).name, rows=rows)
    out = _out_dir(args)
    md.save_model(combined, out / "model.json")
    outputs = ["model.json"] + _write_report(out, report)
    _write_manifest(out, "adapt", [Path(args.data), Path(args.model)], outputs, seed,
                    {"engine": engine, "features": list(features), **config})
    print(
        f"adapt[{engine}]: base MAE {rows[0].mae:.6g} -> combined MAE {rows[1].mae:.6g} Nm"
    )


def cmd_external(args) -> None:
    model = md.load_model(args.model)
    ds = dt.load_csv(args.data)
    tau_hat = md.external_torque(ds, model)
    out = _out_dir(args)
    header = ["t", "tau_ext_hat"]
    columns = [ds.t, tau_hat]
    mae = None
    if ds.tau_ext is not None:
        header += ["tau_ext_measured", "error"]
        columns += [ds.tau_ext, tau_hat - ds.tau_ext]
        mae = float(np.mean(np.abs(tau_hat - ds.tau_ext)))
    _write_samples_csv(out / "external.csv", header, columns)
    summary = {
        "dataset": Path(args.data).name,
        "n_samples": len(ds),
        "mae_external": mae,
        "max_abs_tau_ext_hat": float(np.max(np.abs(tau_hat))),
    }
    write_json(out / "report.json", summary)
    lines = [f"dataset: {summary['dataset']}",
             f"max |tau_ext_hat|: {summary['max_abs_tau_ext_hat']:.6g} Nm"]
    if mae is not None:
        lines.append(f"external-torque MAE: {mae:.6g} Nm")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "external", [Path(args.data), Path(args.model)],
                    ["external.csv", "report.json", "report.txt"], None, {})
    if mae is not None:
        print(f"external-torque MAE {mae:.6g} Nm")
    else:
        print(f"max |tau_ext_hat| {summary['max_abs_tau_ext_hat']:.6g} Nm")


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fricsym",
        description="Identify interpretable friction-torque models from joint logs.",
    )
    parser.add_argument("--version", action="version", version=f"fricsym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, model=False, needs_seed=True):
        if data:
            p.add_argument("--data", required=True, help="dataset CSV")
        if model:
            p.add_argument("--model", required=True, help="model JSON")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out-dir", default="fricsym_out", help="artifact directory")
        p.add_argument("--config", default=None, help="config JSON file")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default="fricsym_out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a friction model")
    common(p)
    p.add_argument("--method", required=True, choices=FIT_METHODS)
    p.add_argument("--features", default=None,
                   help="comma-separated subset of qdot,sign_qdot,tau_g,sign_tau_g")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a model on a dataset")
    common(p, model=True, needs_seed=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("adapt", help="fit an additive residual correction")
    common(p, model=True)
    p.add_argument("--method", default="parfam", choices=("gp", "parfam"),
                   help="residual engine")
    p.add_argument("--features", default=None,
                   help="residual features (qdot is rejected)")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("external", help="estimate external torque")
    common(p, model=True, needs_seed=False)
    p.set_defaults(func=cmd_external)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FitError as err:
        print(f"fit error: {err}", file=sys.stderr)
        return 3
    except MismatchError as err:
        print(f"mismatch: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
