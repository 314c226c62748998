"""Reconstruction metrics, histograms, evaluation scenarios and the fully connected baseline."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.special import expit

from . import optim
from .classifier import ClassifierParams, classify, combine
from .data import Dataset
from .geometry import Grid, Polygon
from .lrtnet import LrtParams, lrt_forward
from .optim import TrainConfig

log = logging.getLogger(__name__)

SCENARIO_DELTA = {1: 0.0, 2: 0.03}
HIST_BIN_WIDTH = 0.002
HIST_RANGE = 0.05


def mse(chi, pred) -> float:
    chi = np.asarray(chi, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if chi.shape != pred.shape:
        raise ValueError("shape mismatch")
    return float(((chi - pred) ** 2).mean())


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, data_range: float = 1.0, size: int = 11, sigma: float = 1.5,
         k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean local SSIM with a Gaussian window and symmetric (half-sample) padding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("images differ in shape")
    w = gaussian_window(size, sigma)

    def filt(x):
        return ndimage.correlate(x, w, mode="reflect")

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    return float(s.mean())


@dataclass
class EvalReport:
    scenario: str
    delta: float
    ids: list = field(default_factory=list)
    bands: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    ssim: list = field(default_factory=list)

    def add(self, sample_id, band, mse_value, ssim_value):
        self.ids.append(sample_id)
        self.bands.append(int(band))
        self.mse.append(float(mse_value))
        self.ssim.append(float(ssim_value))

    def __len__(self):
        return len(self.ids)

    def summary(self) -> dict:
        m = np.asarray(self.mse)
        s = np.asarray(self.ssim)
        return {"n": len(m), "mean_mse": float(m.mean()), "median_mse": float(np.median(m)),
                "frac_mse_le_0.02": float(np.mean(m <= 0.02)),
                "mean_ssim": float(s.mean()), "median_ssim": float(np.median(s))}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_id", "band", "mse", "ssim", "scenario", "delta"])
            for row in zip(self.ids, self.bands, self.mse, self.ssim):
                w.writerow([row[0], row[1], repr(row[2]), repr(row[3]), self.scenario, repr(self.delta)])


def evaluate(preds: np.ndarray, chi: np.ndarray, grid: Grid, scenario: str, delta: float,
             bands=None, ids=None) -> EvalReport:
    report = EvalReport(scenario=scenario, delta=float(delta))
    n = len(preds)
    bands = np.zeros(n, dtype=int) if bands is None else bands
    ids = range(n) if ids is None else ids
    for k, p, c, ell in zip(ids, preds, chi, bands):
        report.add(k, ell, mse(c, p), ssim(grid.as_image(c), grid.as_image(p)))
    return report


def histogram(values, bin_width: float = HIST_BIN_WIDTH, upper: float | None = HIST_RANGE):
    """Fixed-width bins starting at 0; values beyond ``upper`` go to the last bin."""
    v = np.asarray(values, dtype=np.float64)
    top = upper if upper is not None else max(float(v.max(initial=0.0)), bin_width)
    n_bins = max(int(math.ceil(top / bin_width - 1e-9)), 1)
    edges = np.arange(n_bins + 1) * bin_width
    idx = np.clip(np.floor(v / bin_width).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return edges, counts


def write_histogram(path, values, bin_width: float = HIST_BIN_WIDTH, upper=HIST_RANGE) -> None:
    edges, counts = histogram(values, bin_width, upper)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c)])


def write_pgm(path, image) -> None:
    """8-bit binary PGM, value ``round(255 * v)``, top row = largest y."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)[::-1]
    data = np.rint(255.0 * img).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    data = np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)
    return data[::-1] / 255.0


def write_grid_csv(path, grid: Grid, values, contour: Polygon | None = None) -> None:
    """Raw reconstruction values per grid point; the true boundary goes to a ``.contour.csv`` sidecar."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for (x, y), v in zip(grid.points, np.asarray(values, dtype=np.float64)):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
    if contour is not None:
        with open(Path(path).with_suffix(".contour.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for x, y in np.vstack([contour.vertices, contour.vertices[:1]]):
                w.writerow([repr(float(x)), repr(float(y))])


# --- reconstruction with trained models ---------------------------------------------


def lrt_predict(Y, phis: list[LrtParams], classifier: ClassifierParams) -> np.ndarray:
    """Batched three-step reconstruction."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    lam = classify(classifier, Y)
    outs = np.stack([lrt_forward(theta, Y)[0] for theta in phis])
    return combine(lam, outs)


# --- fully connected baseline ---------------------------------------------------------

BASELINE_HIDDEN = (1200, 1200)


@dataclass
class BaselineMlpParams:
    """Fully connected net ``n_omega -> 1200 -> 1200 -> N``: ReLU hidden layers, sigmoid output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def as_dict(self) -> dict[str, np.ndarray]:
        d = {f"W{k}": w for k, w in enumerate(self.weights)}
        d.update({f"b{k}": b for k, b in enumerate(self.biases)})
        return d

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @classmethod
    def random(cls, n_omega: int, n_out: int, seed: int, hidden=BASELINE_HIDDEN):
        rng = np.random.default_rng(seed)
        widths = [n_omega, *hidden, n_out]
        ws, bs = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            s = 1.0 / math.sqrt(fan_in)
            ws.append(rng.uniform(-s, s, (fan_out, fan_in)))
            bs.append(rng.uniform(-s, s, fan_out))
        return cls(ws, bs)


def mlp_forward(theta: BaselineMlpParams, Y):
    Y = np.asarray(Y, dtype=np.float64)
    acts = [np.atleast_2d(Y)]
    pres = []
    for k, (W, b) in enumerate(zip(theta.weights, theta.biases)):
        pre = acts[-1] @ W.T + b
        pres.append(pre)
        last = k == len(theta.weights) - 1
        acts.append(expit(pre) if last else np.maximum(pre, 0.0))
    out = acts[-1]
    return (out[0] if Y.ndim == 1 else out), (pres, acts)


def mlp_loss_and_grad(theta: BaselineMlpParams, Y, chi):
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    chi = np.atleast_2d(np.asarray(chi, dtype=np.float64))
    out, (pres, acts) = mlp_forward(theta, Y)
    diff = out - chi
    loss = float((diff * diff).mean())
    g = (2.0 / diff.size) * diff * out * (1.0 - out)
    grads = {}
    for k in reversed(range(len(theta.weights))):
        grads[f"W{k}"] = g.T @ acts[k]
        grads[f"b{k}"] = g.sum(axis=0)
        if k:
            g = (g @ theta.weights[k]) * (pres[k - 1] > 0)
    return loss, grads


def train_baseline_mlp(Y, chi, config: TrainConfig, scale: float | None = None,
                       hidden=BASELINE_HIDDEN):
    """Train one baseline network; inputs are preconditioned like the classifier's."""
    from .classifier import input_scale

    Y = np.asarray(Y, dtype=np.float64)
    scale = input_scale(Y) if scale is None else float(scale)
    Ys = Y * scale
    theta = BaselineMlpParams.random(Y.shape[1], chi.shape[1], config.seed, hidden)

    def loss_and_grad(p, yb, tb):
        return mlp_loss_and_grad(theta, yb, tb)

    def report(epoch, loss):
        log.info("baseline epoch %d loss %.6f", epoch + 1, loss)

    history = optim.fit(theta.as_dict(), loss_and_grad, Ys, np.asarray(chi, dtype=np.float64),
                        config, report)
    theta.weights[0] *= scale
    return theta, history


def baseline_predict(Y, mlps: list[BaselineMlpParams], classifier: ClassifierParams) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    lam = classify(classifier, Y)
    outs = np.stack([mlp_forward(m, Y)[0] for m in mlps])
    return combine(lam, outs)


# --- scenario 3 fixtures ------------------------------------------------------------


def l_shape() -> Polygon:
    """Non-convex L-shaped hexagon, 1.1 wide and 1.1 tall, centroid near (0.16, -0.34)."""
    v = np.array([[-0.25, -0.75], [0.85, -0.75], [0.85, -0.35], [0.15, -0.35], [0.15, 0.35], [-0.25, 0.35]])
    return Polygon(v)


# points from which the non-convex fixtures are star-shaped (source placement)
L_SHAPE_CENTER = (-0.05, -0.55)
KITE_CENTER = (-0.6, 0.6)


def kite() -> Polygon:
    """Dart-shaped quadrilateral with one reflex vertex, centroid (-0.6, 0.55)."""
    v = np.array([[-0.6, 1.05], [-1.05, 0.15], [-0.6, 0.45], [-0.15, 0.15]])
    return Polygon(v)


def peanut_curve(center=(0.4, 0.6), diameter: float = 1.5, angle: float = math.pi / 6):
    """``r(phi) = a (1 + 0.35 cos 2 phi)``, rotated by ``angle`` and scaled to the given diameter."""
    a = diameter / (2 * 1.35)
    c = np.asarray(center, dtype=np.float64)

    def curve(t):
        phi = 2.0 * math.pi * np.asarray(t)
        r = a * (1.0 + 0.35 * np.cos(2.0 * phi))
        p = np.column_stack([r * np.cos(phi + angle), r * np.sin(phi + angle)])
        return c + p

    return curve


def peanut_polygon(n: int = 128, **kw) -> Polygon:
    return Polygon(peanut_curve(**kw)(np.arange(n) / n))


def scenario3_fixtures():
    """``(name, polygon for the indicator image, measurement function)`` triples."""
    from .forward import solve_omega, solve_omega_curve

    center = (0.4, 0.6)
    fixtures = [
        ("l_shape", l_shape(), lambda: solve_omega(l_shape(), center=L_SHAPE_CENTER).values),
        ("kite", kite(), lambda: solve_omega(kite(), center=KITE_CENTER).values),
        ("peanut", peanut_polygon(center=center),
         lambda: solve_omega_curve(peanut_curve(center=center), center=center).values),
    ]
    return fixtures


def scenario_inputs(scenario: int, test: Dataset | None, delta: float | None = None):
    """Measurements, indicators, bands and ids for one scenario.

    Scenarios 1 and 2 use the test set with delta 0 and 0.03; scenario 3
    runs the three fixtures at both noise levels.
    """
    from .data import noise_seed
    from .forward import add_noise

    if scenario in (1, 2):
        if test is None:
            raise ValueError("scenarios 1 and 2 need a test dataset")
        d = SCENARIO_DELTA[scenario] if delta is None else delta
        ds = test.with_noise(d)
        return [(f"test{k}", ds.polygons[k], ds.y_noisy[k], int(ds.bands[k]), d) for k in range(len(ds))]
    if scenario == 3:
        rows = []
        for k, (name, poly, meas) in enumerate(scenario3_fixtures()):
            y = meas()
            for d in (0.0, 0.03):
                yn = add_noise(y, d, noise_seed(k)).values
                rows.append((f"{name}_delta{d:g}", poly, yn, 0, d))
        return rows
    raise ValueError(f"unknown scenario {scenario}")
