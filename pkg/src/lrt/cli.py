"""Command-line driver: ``lrt <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import config as C
from . import evalkit, geometry, io, oracles, pipeline
from .data import Dataset
from .evalkit import SCENARIO_DELTA

log = logging.getLogger("lrt")

COMPONENTS = ("phi1", "phi2", "phi3", "classifier", "baseline")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="flat 'section.key = value' file")
    p.add_argument("--profile", choices=sorted(C.PROFILES), default="reduced")
    p.add_argument("--seed", type=int, help="seed of the stochastic step this command runs")
    p.add_argument("--delta", type=float, help="noise level")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lrt", description="Learned range test for inclusion imaging.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", parents=[common], help="generate training and test datasets")

    p = sub.add_parser("train", parents=[common], help="train one component")
    p.add_argument("--component", choices=COMPONENTS + ("all",), required=True)
    p.add_argument("--data", type=Path, help="directory holding train.lrtd (default: --out)")

    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct one measurement")
    p.add_argument("--method", choices=("lrt", "rt", "mlp"), default="lrt")
    p.add_argument("--input", type=Path, required=True,
                   help="dataset file (.lrtd) or text file with one measurement vector")
    p.add_argument("--index", type=int, default=0, help="sample index inside a dataset file")
    p.add_argument("--models", type=Path, help="directory holding model files (default: --out)")

    p = sub.add_parser("eval", parents=[common], help="evaluate a scenario")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3))
    p.add_argument("--method", choices=("lrt", "rt", "mlp"), default="lrt")
    p.add_argument("--data", type=Path, help="directory holding test.lrtd (default: --out)")
    p.add_argument("--models", type=Path, help="directory holding model files (default: --out)")

    sub.add_parser("oracle-check", parents=[common], help="run the analytic self-checks")

    p = sub.add_parser("plot-hist", parents=[common], help="bin the MSE column of an eval report")
    p.add_argument("--report", type=Path, required=True)
    return parser


# --- helpers --------------------------------------------------------------------------


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise C.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value
    return out


def _write_sidecar(path: Path, cfg: dict, seeds: dict) -> None:
    lines = [f"# {k} = {v}\n" for k, v in sorted(seeds.items())]
    Path(str(path) + ".config").write_text("".join(lines) + C.dump(cfg))


def _announce(cfg: dict, seeds: dict) -> None:
    print("# resolved configuration")
    print(C.dump(cfg), end="")
    for k, v in sorted(seeds.items()):
        print(f"# seed {k} = {v}")


def _models_dir(args) -> Path:
    return args.models or args.out


def _load_lrt(cfg: dict, models: Path):
    shape = pipeline.shape_header(cfg)
    phis = [io.unpack_phi(io.load_model(models / f"phi{b}.lrtm", shape)) for b in (1, 2, 3)]
    return phis, _load_classifier(cfg, models)


def _load_classifier(cfg: dict, models: Path):
    return io.unpack_classifier(io.load_model(models / "classifier.lrtm", pipeline.shape_header(cfg)))


def _load_baseline(cfg: dict, models: Path):
    return io.unpack_baseline(io.load_model(models / "baseline.lrtm", pipeline.shape_header(cfg)))


class _Predictor:
    """Loads what one reconstruction method needs, once."""

    def __init__(self, method: str, cfg: dict, models: Path):
        self.method, self.cfg = method, cfg
        self.kw = {"cfg": cfg}
        if method == "lrt":
            self.kw["phis"], self.kw["classifier"] = _load_lrt(cfg, models)
        elif method == "mlp":
            self.kw["mlps"] = _load_baseline(cfg, models)
            self.kw["classifier"] = _load_classifier(cfg, models)
        else:
            self.kw["bank"] = pipeline.make_bank(cfg)

    def __call__(self, Y) -> np.ndarray:
        return pipeline.predict(self.method, Y, **self.kw)


# --- commands -------------------------------------------------------------------------


def cmd_gen_data(args, cfg: dict) -> None:
    seeds = {"dataset.seed": cfg["dataset.seed"]}
    _announce(cfg, seeds)
    args.out.mkdir(parents=True, exist_ok=True)
    t = time.perf_counter()
    for name, make in (("train", pipeline.make_training), ("test", pipeline.make_test)):
        ds = make(cfg)
        path = args.out / f"{name}.lrtd"
        io.save_dataset(path, ds)
        _write_sidecar(path, cfg, seeds)
        print(f"wrote {path} ({len(ds)} samples)")
    print(f"elapsed {time.perf_counter() - t:.1f} s")


def _train_one(component: str, cfg: dict, train: Dataset, out: Path) -> None:
    shape = pipeline.shape_header(cfg)
    t = time.perf_counter()
    if component.startswith("phi"):
        band = int(component[-1])
        init = cfg["train.phi.init"]
        bank = pipeline.make_bank(cfg) if init == "rt" else None
        theta, history = pipeline.train_band(cfg, bank, train, band)
        mf = io.pack_phi(theta, band, shape)
    elif component == "classifier":
        theta, history = pipeline.train_classifier_for(cfg, train)
        mf = io.pack_classifier(theta, shape)
    else:
        nets, history = pipeline.train_baseline(cfg, train)
        mf = io.pack_baseline(nets, shape)
    path = out / f"{component}.lrtm"
    io.save_model(path, mf)
    (out / f"{component}.loss.txt").write_text(
        "".join(f"{k + 1} {loss!r}\n" for k, loss in enumerate(history)))
    key = "phi" if component.startswith("phi") else component
    _write_sidecar(path, cfg, {f"train.{key}.seed": cfg[f"train.{key}.seed"]})
    print(f"wrote {path} ({time.perf_counter() - t:.1f} s)")


def cmd_train(args, cfg: dict) -> None:
    comps = COMPONENTS if args.component == "all" else (args.component,)
    keys = {("phi" if c.startswith("phi") else c) for c in comps}
    if args.seed is not None:
        for k in keys:
            cfg[f"train.{k}.seed"] = args.seed
    _announce(cfg, {f"train.{k}.seed": cfg[f"train.{k}.seed"] for k in sorted(keys)})
    train = io.load_dataset((args.data or args.out) / "train.lrtd")
    if args.delta is not None:
        train = train.with_noise(args.delta)
    args.out.mkdir(parents=True, exist_ok=True)
    for comp in comps:
        _train_one(comp, cfg, train, args.out)


def _read_measurement(path: Path, index: int, cfg: dict):
    """``(name, y, polygon or None)`` from a dataset file or a text vector."""
    if path.suffix == ".lrtd":
        ds = io.load_dataset(path)
        if not 0 <= index < len(ds):
            raise IndexError(f"sample {index} out of range for {len(ds)} samples")
        return f"{path.stem}{index}", ds.y_noisy[index], ds.polygons[index]
    y = np.loadtxt(path, delimiter=None if "," not in path.read_text() else ",").ravel()
    if len(y) != cfg["geometry.n_omega"]:
        raise ValueError(f"measurement has {len(y)} values, configuration expects {cfg['geometry.n_omega']}")
    return path.stem, y, None


def cmd_reconstruct(args, cfg: dict) -> None:
    _announce(cfg, {})
    name, y, poly = _read_measurement(args.input, args.index, cfg)
    if args.delta:
        from .data import noise_seed
        from .forward import add_noise

        seed = args.seed if args.seed is not None else cfg["dataset.seed"]
        y = add_noise(y, args.delta, noise_seed(seed)).values
    predictor = _Predictor(args.method, cfg, _models_dir(args))
    t = time.perf_counter()
    f = predictor(y)[0]
    elapsed = time.perf_counter() - t
    grid = C.grid(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    stem = args.out / f"recon_{args.method}_{name}"
    evalkit.write_grid_csv(stem.with_suffix(".csv"), grid, f, poly)
    evalkit.write_pgm(stem.with_suffix(".pgm"), grid.as_image(f))
    _write_sidecar(stem.with_suffix(".csv"), cfg, {})
    print(f"wrote {stem}.csv and {stem}.pgm (reconstruction {elapsed:.3f} s)")


def cmd_eval(args, cfg: dict) -> None:
    scenario = args.scenario or cfg["eval.scenario"]
    delta = args.delta if args.delta is not None else SCENARIO_DELTA.get(scenario)
    _announce(cfg, {"noise": "per-sample seeds stored in the dataset"})
    test = io.load_dataset((args.data or args.out) / "test.lrtd") if scenario in (1, 2) else None
    rows = evalkit.scenario_inputs(scenario, test, delta)
    predictor = _Predictor(args.method, cfg, _models_dir(args))
    grid = C.grid(cfg)
    Y = np.array([r[2] for r in rows])
    preds = predictor(Y)
    chi = np.array([geometry.indicator_image(r[1], grid) for r in rows])
    # scenario 3 mixes both noise levels; the level is part of each sample id
    report = evalkit.evaluate(preds, chi, grid, f"scenario{scenario}",
                              delta if scenario != 3 else float("nan"),
                              [r[3] for r in rows], [r[0] for r in rows])
    tag = f"eval_s{scenario}_{args.method}"
    img_dir = args.out / tag
    img_dir.mkdir(parents=True, exist_ok=True)
    report_path = args.out / f"{tag}.csv"
    report.write_csv(report_path)
    _write_sidecar(report_path, cfg, {})
    evalkit.write_histogram(args.out / f"{tag}_hist.csv", report.mse, cfg["eval.bin_width"],
                            cfg["eval.hist_range"])
    for (sid, poly, *_), f in zip(rows, preds):
        evalkit.write_pgm(img_dir / f"{sid}.pgm", grid.as_image(f))
        evalkit.write_grid_csv(img_dir / f"{sid}.csv", grid, f, poly)
    for k, v in report.summary().items():
        print(f"{k} = {v:.6g}")
    print(f"wrote {report_path}")


def cmd_oracle_check(args, cfg: dict) -> int:
    _announce(cfg, {})
    results = oracles.run_all(fail_fast=True)
    return 0 if all(r.ok for r in results) and len(results) == len(oracles.checks()) else 1


def cmd_plot_hist(args, cfg: dict) -> None:
    import csv

    with open(args.report, newline="") as fh:
        values = [float(row["mse"]) for row in csv.DictReader(fh)]
    edges, counts = evalkit.histogram(values, cfg["eval.bin_width"], cfg["eval.hist_range"])
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{args.report.stem}_hist.csv"
    evalkit.write_histogram(path, values, cfg["eval.bin_width"], cfg["eval.hist_range"])
    scale = 50 / max(counts.max(), 1)
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        print(f"[{lo:.3f}, {hi:.3f}) {int(c):5d} {'#' * int(round(c * scale))}")
    print(f"wrote {path}")


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "reconstruct": cmd_reconstruct,
            "eval": cmd_eval, "oracle-check": cmd_oracle_check, "plot-hist": cmd_plot_hist}


def resolve_config(args) -> dict:
    overrides = _overrides(args)
    if args.command == "gen-data":
        if args.seed is not None:
            overrides["dataset.seed"] = args.seed
        if args.delta is not None:
            overrides["dataset.delta"] = args.delta
    return C.resolve(args.profile, args.config, overrides)


def _thread_limit():
    value = os.environ.get("LRT_THREADS")
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    n = int(value)
    if n < 1:
        raise ValueError("LRT_THREADS must be a positive integer")
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        with _thread_limit():
            status = COMMANDS[args.command](args, cfg)
    except (OSError, ValueError, IndexError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
