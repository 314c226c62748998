"""Flat ``section.key = value`` pipeline configuration with ``full`` and ``reduced`` profiles."""

from __future__ import annotations

from pathlib import Path

from .forward import Fidelity
from .geometry import Grid, InclusionSampleSpec, make_grid
from .optim import TrainConfig
from .rangetest import RtConfig

FULL = {
    "geometry.r_omega": 10.0,
    "geometry.bounds": (-2.0, 2.0, -2.0, 2.0),
    "geometry.nx": 41,
    "geometry.ny": 41,
    "geometry.M": 24,
    "geometry.m_nodes": 60,
    "geometry.n_omega": 400,
    "geometry.side": 3.2,
    "rt.alpha": 1e-8,
    "rt.threshold": "percentile",
    "rt.percentile": 90.0,
    "rt.weighted": True,
    "dataset.counts": (4000, 4000, 4000),
    "dataset.test_count": 1000,
    "dataset.bands": (0.0, 0.4, 0.8, 1.2),
    "dataset.circumradius": (0.4, 0.6),
    "dataset.side_counts": (3, 4, 5, 6),
    "dataset.min_angle_gap": 0.15,
    "dataset.center_mode": "norm",
    "dataset.seed": 2024,
    "dataset.delta": 0.0,
    "train.phi.epochs": 80,
    "train.phi.batch_size": 256,
    "train.phi.lr": 0.5,
    "train.phi.halving_period": 3,
    "train.phi.init": "rt",
    "train.phi.seed": 11,
    "train.classifier.epochs": 80,
    "train.classifier.batch_size": 128,
    "train.classifier.lr": 0.1,
    "train.classifier.halving_period": 3,
    "train.classifier.seed": 12,
    "train.baseline.epochs": 80,
    "train.baseline.batch_size": 256,
    "train.baseline.lr": 0.5,
    "train.baseline.halving_period": 3,
    "train.baseline.seed": 13,
    "train.adam.beta1": 0.9,
    "train.adam.beta2": 0.999,
    "train.adam.eps": 1e-8,
    "eval.scenario": 1,
    "eval.bin_width": 0.002,
    "eval.hist_range": 0.05,
    "fidelity.data.n_src": 160,
    "fidelity.data.n_col": 320,
    "fidelity.data.contraction": 0.9,
    "fidelity.operator.n_src": 80,
    "fidelity.operator.n_col": 160,
    "fidelity.operator.contraction": 0.9,
}

REDUCED = {
    **FULL,
    "geometry.nx": 21,
    "geometry.ny": 21,
    "geometry.M": 8,
    "geometry.m_nodes": 20,
    "dataset.counts": (500, 500, 500),
    "dataset.test_count": 150,
    # batch sizes keep the optimizer steps per epoch of the full profile
    "train.phi.epochs": 20,
    "train.phi.batch_size": 32,
    "train.classifier.epochs": 20,
    "train.classifier.batch_size": 16,
    "train.baseline.epochs": 20,
    "train.baseline.batch_size": 32,
}

PROFILES = {"full": FULL, "reduced": REDUCED}


class ConfigError(ValueError):
    pass


def _parse_value(text: str, like):
    text = text.strip()
    if isinstance(like, bool):
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    if isinstance(like, tuple):
        items = [t for t in text.replace(",", " ").split() if t]
        return tuple(_parse_value(t, like[0]) for t in items)
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    if isinstance(like, str):
        return text
    raise ConfigError(f"unsupported value type for {text!r}")


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def resolve(profile: str = "reduced", path: str | Path | None = None,
            overrides: dict | None = None) -> dict:
    """Profile defaults, then the config file, then explicit overrides (strings or values)."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    cfg = dict(PROFILES[profile])
    if path is not None:
        cfg.update(parse_text(Path(path).read_text(), cfg))
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _parse_value(value, cfg[key]) if isinstance(value, str) else value
    if cfg["rt.threshold"] != "percentile":
        float(cfg["rt.threshold"])
    return cfg


def parse_text(text: str, base: dict) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in base:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(value, base[key])
    return out


def dump(cfg: dict) -> str:
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in sorted(cfg.items()))


# --- typed views ---------------------------------------------------------------------


def grid(cfg: dict) -> Grid:
    return make_grid(cfg["geometry.bounds"], cfg["geometry.nx"], cfg["geometry.ny"],
                     cfg["geometry.r_omega"])


def rt_config(cfg: dict, grid_: Grid | None = None) -> RtConfig:
    thr = cfg["rt.threshold"]
    return RtConfig(grid=grid_ or grid(cfg), alpha=cfg["rt.alpha"],
                    C=None if thr == "percentile" else float(thr),
                    percentile=cfg["rt.percentile"], M=cfg["geometry.M"],
                    m_nodes=cfg["geometry.m_nodes"], n_omega=cfg["geometry.n_omega"],
                    side=cfg["geometry.side"], r_omega=cfg["geometry.r_omega"],
                    weighted=cfg["rt.weighted"])


def sample_spec(cfg: dict, band: int | None = None) -> InclusionSampleSpec:
    return InclusionSampleSpec(band=band, band_edges=cfg["dataset.bands"],
                               circumradius_range=cfg["dataset.circumradius"],
                               side_counts=cfg["dataset.side_counts"],
                               min_angle_gap=cfg["dataset.min_angle_gap"],
                               center_mode=cfg["dataset.center_mode"])


def train_config(cfg: dict, component: str, seed: int | None = None) -> TrainConfig:
    """``component`` is ``phi``, ``classifier`` or ``baseline``."""
    p = f"train.{component}."
    init = cfg.get(p + "init", "rt")
    return TrainConfig(epochs=cfg[p + "epochs"], batch_size=cfg[p + "batch_size"], lr=cfg[p + "lr"],
                       halving_period=cfg[p + "halving_period"], beta1=cfg["train.adam.beta1"],
                       beta2=cfg["train.adam.beta2"], eps=cfg["train.adam.eps"], init_mode=init,
                       seed=cfg[p + "seed"] if seed is None else seed)


def fidelity(cfg: dict, grade: str = "data") -> Fidelity:
    p = f"fidelity.{grade}."
    return Fidelity(n_src=cfg[p + "n_src"], n_col=cfg[p + "n_col"], contraction=cfg[p + "contraction"])
