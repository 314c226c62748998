"""Synthetic datasets of random inclusions with their measurements and grid indicators."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .forward import add_noise, solve_omega
from .geometry import Grid, InclusionSampleSpec, Polygon

log = logging.getLogger(__name__)

TEST_SPLIT = 0


def split_seed(base_seed: int, band: int) -> int:
    """Seed of one split; ``band = 0`` is the test set."""
    return base_seed * 16 + band


def sample_seed(dataset_seed: int, index: int) -> int:
    return ((dataset_seed << 32) ^ index) & 0xFFFFFFFFFFFFFFFF


def noise_seed(seed: int) -> int:
    return seed | (1 << 63)


@dataclass
class Dataset:
    bands: np.ndarray  # (n,) uint8, 1-based
    polygons: list[Polygon]
    chi: np.ndarray  # (n, N) uint8
    y: np.ndarray  # (n, n_omega)
    y_noisy: np.ndarray
    delta: float
    seeds: np.ndarray  # (n,) uint64
    offsets: np.ndarray = field(default=None)  # |h| when known

    def __len__(self) -> int:
        return len(self.bands)

    def inputs(self, noisy: bool = True) -> np.ndarray:
        return self.y_noisy if noisy else self.y

    def subset(self, mask) -> "Dataset":
        idx = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask)
        return Dataset(self.bands[idx], [self.polygons[i] for i in idx], self.chi[idx],
                       self.y[idx], self.y_noisy[idx], self.delta, self.seeds[idx],
                       None if self.offsets is None else self.offsets[idx])

    def band(self, ell: int) -> "Dataset":
        return self.subset(self.bands == ell)

    def with_noise(self, delta: float) -> "Dataset":
        """Same inclusions with ``y_noisy`` regenerated at level ``delta`` from the stored seeds."""
        noisy = np.array([add_noise(y, delta, noise_seed(int(s))).values
                          for y, s in zip(self.y, self.seeds)]) if len(self) else self.y.copy()
        return Dataset(self.bands, self.polygons, self.chi, self.y, noisy, float(delta),
                       self.seeds, self.offsets)

    @staticmethod
    def concat(parts: list["Dataset"]) -> "Dataset":
        offsets = None
        if all(p.offsets is not None for p in parts):
            offsets = np.concatenate([p.offsets for p in parts])
        return Dataset(np.concatenate([p.bands for p in parts]),
                       [poly for p in parts for poly in p.polygons],
                       np.concatenate([p.chi for p in parts]),
                       np.concatenate([p.y for p in parts]),
                       np.concatenate([p.y_noisy for p in parts]),
                       parts[0].delta,
                       np.concatenate([p.seeds for p in parts]),
                       offsets)


def measure(poly: Polygon, grid: Grid, delta: float, seed: int, n_omega: int = 400,
            fidelity: str = "data_grade") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indicator image, clean measurement and noisy measurement of one inclusion."""
    y = solve_omega(poly, fidelity, n_omega)
    y_noisy = add_noise(y, delta, noise_seed(seed))
    return geometry.indicator_image(poly, grid), y.values, y_noisy.values


def generate(spec: InclusionSampleSpec, count: int, grid: Grid, delta: float,
             dataset_seed: int, n_omega: int = 400) -> Dataset:
    """``count`` inclusions drawn with ``spec``; sample ``k`` uses seed ``(dataset_seed << 32) ^ k``."""
    bands, polys, chis, ys, yns, seeds, offs = [], [], [], [], [], [], []
    for k in range(count):
        s = sample_seed(dataset_seed, k)
        poly, h = geometry.draw_inclusion(spec, np.random.default_rng(s))
        off = float(np.hypot(*h))
        chi, y, yn = measure(poly, grid, delta, s, n_omega)
        bands.append(spec.band if spec.band is not None else geometry.band_of(off, spec.band_edges))
        polys.append(poly)
        chis.append(chi)
        ys.append(y)
        yns.append(yn)
        seeds.append(s)
        offs.append(off)
    n_pts = grid.n
    return Dataset(bands=np.asarray(bands, dtype=np.uint8), polygons=polys,
                   chi=np.asarray(chis, dtype=np.uint8).reshape(count, n_pts),
                   y=np.asarray(ys).reshape(count, n_omega),
                   y_noisy=np.asarray(yns).reshape(count, n_omega),
                   delta=float(delta), seeds=np.asarray(seeds, dtype=np.uint64),
                   offsets=np.asarray(offs))


def generate_training(counts, grid: Grid, delta: float, base_seed: int,
                      spec: InclusionSampleSpec | None = None, n_omega: int = 400) -> Dataset:
    """Concatenated per-band training sets (band 1 first)."""
    spec = spec or InclusionSampleSpec()
    parts = []
    for ell, count in enumerate(counts, start=1):
        band_spec = InclusionSampleSpec(**{**spec.__dict__, "band": ell})
        parts.append(generate(band_spec, count, grid, delta, split_seed(base_seed, ell), n_omega))
        log.info("band %d: %d samples", ell, count)
    return Dataset.concat(parts)


def generate_test(count: int, grid: Grid, delta: float, base_seed: int,
                  spec: InclusionSampleSpec | None = None, n_omega: int = 400) -> Dataset:
    """Test inclusions with center offsets spread over all bands; labels follow ``|h|``."""
    spec = spec or InclusionSampleSpec()
    test_spec = InclusionSampleSpec(**{**spec.__dict__, "band": None})
    return generate(test_spec, count, grid, delta, split_seed(base_seed, TEST_SPLIT), n_omega)
