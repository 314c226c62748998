"""Polygons, sampling grids, rotated test-domain families and random inclusions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

R_OMEGA = 10.0
BAND_EDGES = (0.0, 0.4, 0.8, 1.2)
_CONVEX_TOL = 1e-12


class GeometryError(ValueError):
    pass


def _as_points(vertices) -> np.ndarray:
    pts = np.asarray(vertices, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"expected an (n, 2) vertex array, got shape {pts.shape}")
    return pts


def signed_area(vertices) -> float:
    pts = _as_points(vertices)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def edge_cross_products(vertices) -> np.ndarray:
    """Cross products of consecutive edge vectors; all positive for a strictly convex CCW polygon."""
    pts = _as_points(vertices)
    e = np.roll(pts, -1, axis=0) - pts
    e_next = np.roll(e, -1, axis=0)
    return e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]


@dataclass(frozen=True)
class Polygon:
    """Closed polygon given by its vertex list.

    Convex polygons (inclusions and test domains) must be counterclockwise
    and strictly convex; ``check`` enforces this together with containment
    in the disk of radius ``r_omega``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.vertices).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.hypot(e[:, 0], e[:, 1]).sum())

    @property
    def centroid(self) -> np.ndarray:
        pts = self.vertices
        nxt = np.roll(pts, -1, axis=0)
        cross = pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]
        a = 0.5 * cross.sum()
        cx = ((pts[:, 0] + nxt[:, 0]) * cross).sum() / (6.0 * a)
        cy = ((pts[:, 1] + nxt[:, 1]) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])

    def is_convex(self) -> bool:
        return len(self) >= 3 and bool(np.all(edge_cross_products(self.vertices) > _CONVEX_TOL))

    def check(self, r_omega: float = R_OMEGA, convex: bool = True) -> "Polygon":
        if len(self) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        if convex and not self.is_convex():
            raise GeometryError("polygon is not strictly convex and counterclockwise")
        if not convex and self.area <= 0:
            raise GeometryError("polygon is not counterclockwise")
        if np.any(np.hypot(self.vertices[:, 0], self.vertices[:, 1]) >= r_omega):
            raise GeometryError("polygon leaves the disk")
        return self

    def contains(self, points) -> np.ndarray:
        return points_in_polygon(points, self)


@dataclass(frozen=True)
class Disk:
    radius: float = R_OMEGA

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    nx: int
    ny: int
    bounds: tuple[float, float, float, float]

    @property
    def n(self) -> int:
        return self.nx * self.ny

    @property
    def spacing(self) -> tuple[float, float]:
        x0, x1, y0, y1 = self.bounds
        return (x1 - x0) / (self.nx - 1), (y1 - y0) / (self.ny - 1)

    def as_image(self, values) -> np.ndarray:
        """Reshape a length-N vector into an (ny, nx) image, row 0 at the bottom edge."""
        return np.asarray(values).reshape(self.ny, self.nx)


@dataclass(frozen=True)
class TestDomainFamily:
    anchor: np.ndarray
    domains: list[Polygon] = field(default_factory=list)

    __test__ = False  # not a pytest class

    @property
    def size(self) -> int:
        return len(self.domains)


@dataclass(frozen=True)
class InclusionSampleSpec:
    """Parameters of the random inclusion generator.

    ``band`` selects the radial band ``[edges[band-1], edges[band])`` for the
    center offset; ``band=None`` draws the offset norm across all bands, as
    used for test sets. ``center_mode`` is ``"norm"`` (uniform norm, uniform
    angle) or ``"area"`` (uniform over the annulus area).
    """

    band: int | None = 1
    band_edges: tuple[float, ...] = BAND_EDGES
    circumradius_range: tuple[float, float] = (0.4, 0.6)
    side_counts: tuple[int, ...] = (3, 4, 5, 6)
    min_angle_gap: float = 0.15
    center_mode: str = "norm"
    max_attempts: int = 1000

    def __post_init__(self):
        edges = self.band_edges
        if any(b <= a for a, b in zip(edges, edges[1:])) or edges[0] < 0:
            raise GeometryError("band edges must be increasing and non-negative")
        if self.band is not None and not 1 <= self.band < len(edges):
            raise GeometryError(f"band must be in 1..{len(edges) - 1}")
        if self.center_mode not in ("norm", "area"):
            raise GeometryError(f"unknown center_mode {self.center_mode!r}")
        lo, hi = self.circumradius_range
        if not 0 < lo <= hi:
            raise GeometryError("bad circumradius range")
        if min(self.side_counts) < 3:
            raise GeometryError("need at least 3 sides")

    @property
    def n_bands(self) -> int:
        return len(self.band_edges) - 1

    @property
    def offset_range(self) -> tuple[float, float]:
        if self.band is None:
            return self.band_edges[0], self.band_edges[-1]
        return self.band_edges[self.band - 1], self.band_edges[self.band]


def band_of(offset_norm: float, band_edges=BAND_EDGES) -> int:
    """Band index (1-based) of a center offset; edges belong to the higher band."""
    for ell in range(1, len(band_edges)):
        if offset_norm < band_edges[ell]:
            return max(ell, 1)
    return len(band_edges) - 1


def regular_polygon(center, circumradius: float, angles) -> Polygon:
    angles = np.asarray(angles, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    pts = c + circumradius * np.column_stack([np.cos(angles), np.sin(angles)])
    return Polygon(pts)


def draw_offset(rng: np.random.Generator, spec: InclusionSampleSpec) -> np.ndarray:
    lo, hi = spec.offset_range
    if spec.center_mode == "norm":
        rho = rng.uniform(lo, hi)
    else:
        rho = math.sqrt(rng.uniform(lo * lo, hi * hi))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([rho * math.cos(phi), rho * math.sin(phi)])


def draw_inclusion(spec: InclusionSampleSpec, rng: np.random.Generator,
                   r_omega: float = R_OMEGA) -> tuple[Polygon, np.ndarray]:
    """Draw one random convex inclusion and return it with its center offset ``h``."""
    h = draw_offset(rng, spec)
    r = rng.uniform(*spec.circumradius_range)
    k = int(rng.choice(spec.side_counts))
    for _ in range(spec.max_attempts):
        psi = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=k))
        gaps = np.diff(np.append(psi, psi[0] + 2.0 * math.pi))
        if gaps.min() < spec.min_angle_gap:
            continue
        poly = regular_polygon(h, r, psi).check(r_omega)
        if not diameter(poly) < distance_to_circle(poly, r_omega):
            raise GeometryError("sampled inclusion violates diam(B) < dist(B, boundary)")
        return poly, h
    raise GeometryError(f"no admissible angle set for k={k} after {spec.max_attempts} attempts")


def sample_inclusion(spec: InclusionSampleSpec, rng_seed: int, r_omega: float = R_OMEGA) -> Polygon:
    """Random convex polygon with vertices ``h + r (cos psi_j, sin psi_j)``, angles sorted.

    Angle draws with a gap (wrap-around included) below ``spec.min_angle_gap``
    are rejected and redrawn.
    """
    return draw_inclusion(spec, np.random.default_rng(rng_seed), r_omega)[0]


def make_grid(bounds, nx: int, ny: int, r_omega: float = R_OMEGA) -> Grid:
    """Uniform Cartesian grid over ``bounds = (x0, x1, y0, y1)``, x varying fastest."""
    if nx < 2 or ny < 2:
        raise GeometryError("grid needs at least 2 points per axis")
    x0, x1, y0, y1 = map(float, bounds)
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    if np.any(np.hypot(corners[:, 0], corners[:, 1]) >= r_omega):
        raise GeometryError("grid bounds leave the disk")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)  # rows follow y, so ravel gives x fastest
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return Grid(points=pts, nx=nx, ny=ny, bounds=(x0, x1, y0, y1))


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotate_points(points, angle: float, about=(0.0, 0.0)) -> np.ndarray:
    p0 = np.asarray(about, dtype=np.float64)
    return (np.asarray(points, dtype=np.float64) - p0) @ rotation_matrix(angle).T + p0


def rotate_polygon(poly: Polygon, angle: float, about=(0.0, 0.0)) -> Polygon:
    return Polygon(rotate_points(poly.vertices, angle, about))


def square_template(anchor, side: float = 3.2) -> Polygon:
    """Axis-aligned square with one vertex at ``anchor``, extending into +x, +y."""
    a = np.asarray(anchor, dtype=np.float64)
    offs = np.array([[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]])
    return Polygon(a + offs)


def make_test_domain_family(anchor, base_shape: Polygon, M: int,
                            r_omega: float = R_OMEGA) -> TestDomainFamily:
    """Rotate ``base_shape`` about ``anchor`` by ``2*pi*j/(M+1)`` for ``j = 0..M``."""
    anchor = np.asarray(anchor, dtype=np.float64)
    if M < 0:
        raise GeometryError("M must be non-negative")
    if not np.any(np.all(np.isclose(base_shape.vertices, anchor, atol=1e-12), axis=1)):
        raise GeometryError("anchor must be a vertex of the base test domain")
    domains = []
    for j in range(M + 1):
        g = rotate_polygon(base_shape, 2.0 * math.pi * j / (M + 1), about=anchor)
        if np.any(np.hypot(g.vertices[:, 0], g.vertices[:, 1]) >= r_omega):
            raise GeometryError(f"test domain rotation j={j} about {anchor.tolist()} leaves the disk")
        domains.append(g)
    return TestDomainFamily(anchor=anchor, domains=domains)


def points_in_polygon(points, poly: Polygon, tol: float = 1e-12) -> np.ndarray:
    """Closed point-in-polygon test; boundary points count as inside.

    Convex polygons use the half-plane test; anything else falls back to
    even-odd ray casting with an explicit on-edge check.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    v = poly.vertices
    e = np.roll(v, -1, axis=0) - v
    rel = pts[:, None, :] - v[None, :, :]
    cross = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
    scale = np.hypot(e[:, 0], e[:, 1])[None, :]
    if poly.is_convex():
        return np.all(cross >= -tol * scale, axis=1)

    # on-edge points
    t = (rel * e[None]).sum(-1) / (scale ** 2)
    on_edge = np.any((np.abs(cross) <= tol * scale) & (t >= -tol) & (t <= 1 + tol), axis=1)
    x, y = pts[:, 0:1], pts[:, 1:2]
    x0, y0 = v[None, :, 0], v[None, :, 1]
    x1, y1 = np.roll(v, -1, axis=0)[None, :, 0], np.roll(v, -1, axis=0)[None, :, 1]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    inside = np.sum(straddle & (x < x_cross), axis=1) % 2 == 1
    return inside | on_edge


def point_in_polygon(p, poly: Polygon) -> bool:
    return bool(points_in_polygon(np.asarray(p, dtype=np.float64)[None, :], poly)[0])


def indicator_image(B: Polygon, grid: Grid) -> np.ndarray:
    """0/1 vector over the grid points marking the closed inclusion."""
    return points_in_polygon(grid.points, B).astype(np.uint8)


def diameter(poly: Polygon) -> float:
    v = poly.vertices
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def distance_to_circle(poly: Polygon, r_omega: float = R_OMEGA) -> float:
    """Distance from a polygon inside the disk to the circle; attained at a vertex."""
    return float(r_omega - np.hypot(poly.vertices[:, 0], poly.vertices[:, 1]).max())
