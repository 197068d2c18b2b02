"""Bounds for the uniform ensemble of all pure qubit states.

Upper bounds come from equal-area circular caps. Lower bounds come from
concrete geodesic Voronoi partitions of the sphere, integrated numerically:
for cells ``k`` with probability ``p_k`` (area fraction) and mean Bloch vector
``r_k``, the optimal fidelity of the partition is ``1/2 (1 + sum_k |p_k r_k|)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import platonic_vertices, uniform_sphere_sample
from .errors import InputError

FOUR_PI = 4 * math.pi


def cap_average_radius(area):
    """Mean Bloch vector length over a circular cap of the given area."""
    if not 0 < area <= FOUR_PI * (1 + 1e-15):
        raise InputError(f"cap area {area} outside (0, 4 pi]", "area")
    return max(1 - area / FOUR_PI, 0.0)


def cap_bound_for_areas(areas):
    """Fidelity bound if every region of the given areas were a cap."""
    a = np.asarray(areas, dtype=float)
    if np.any(a < 0) or abs(a.sum() - FOUR_PI) > 1e-9:
        raise InputError("areas must be non-negative and sum to 4 pi", "area")
    p = a / FOUR_PI
    return float(0.5 * (1 + np.sum(p * (1 - p))))


def cap_upper_bound(c):
    """Equal-area cap bound ``1 - 2**-(c + 1)`` for ``c`` cbits."""
    if c < 0:
        raise InputError("cbits must be non-negative", "cbits")
    return 1 - 2.0 ** -(c + 1)


@dataclass(frozen=True)
class LatLongGrid:
    """Midpoint latitude-longitude product grid weighted by exact cell areas."""

    n_polar: int = 2048
    n_azimuth: int = 4096
    rows_per_chunk: int = 64

    stochastic = False

    def chunks(self):
        edges = np.linspace(0, math.pi, self.n_polar + 1)
        band = (np.cos(edges[:-1]) - np.cos(edges[1:])) / (2 * self.n_azimuth)
        phi = (edges[:-1] + edges[1:]) / 2
        theta = (np.arange(self.n_azimuth) + 0.5) * (2 * math.pi / self.n_azimuth)
        ct, st = np.cos(theta), np.sin(theta)
        for start in range(0, self.n_polar, self.rows_per_chunk):
            sl = slice(start, start + self.rows_per_chunk)
            sp, cp = np.sin(phi[sl])[:, None], np.cos(phi[sl])[:, None]
            pts = np.stack([sp * ct, sp * st, np.broadcast_to(cp, (len(sp), self.n_azimuth))], axis=-1)
            w = np.broadcast_to(band[sl][:, None], (len(sp), self.n_azimuth))
            yield pts.reshape(-1, 3), w.reshape(-1)


@dataclass(frozen=True)
class MonteCarlo:
    """Uniform random nodes with equal weights."""

    samples: int = 200_000
    seed: int = 0

    stochastic = True

    def chunks(self):
        pts = uniform_sphere_sample(self.samples, self.seed)
        yield pts, np.full(self.samples, 1 / self.samples)


def parse_grid(text):
    """``"RxC"`` -> LatLongGrid(R, C)."""
    try:
        r, c = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise InputError(f"grid must look like 2048x4096, got {text!r}", "grid") from exc
    return LatLongGrid(r, c)


def partition_seeds(name, c=None, seed=0):
    """Voronoi generators for a named partition of the sphere.

    ``tetrahedron`` and ``octahedron`` give the spherical faces obtained by
    joining the solid's vertices with great-circle arcs; the generators are the
    face centres (four and eight of them). ``antipodal`` gives two hemispheres
    and ``random`` draws ``2**c`` uniform points.
    """
    if name == "tetrahedron":
        return -platonic_vertices("tetrahedron")
    if name == "octahedron":
        return platonic_vertices("cube")
    if name == "antipodal":
        return np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    if name == "random":
        if c is None:
            raise InputError("random seeds need a cbit count", "cbits")
        return uniform_sphere_sample(2**c, seed)
    raise InputError(f"unknown seed preset {name!r}", "seeds")


def _check_seeds(seeds):
    s = np.asarray(seeds, dtype=float).reshape(-1, 3)
    if len(s) < 1:
        raise InputError("need at least one generator point", "degenerate-seeds")
    norms = np.linalg.norm(s, axis=1)
    if np.any(norms < 1e-12):
        raise InputError("generator points must be non-zero", "degenerate-seeds")
    s = s / norms[:, None]
    if len(s) > 1:
        g = np.clip(s @ s.T, -1, 1)
        iu = np.triu_indices(len(s), 1)
        if np.min(np.arccos(g[iu])) <= 1e-6:
            raise InputError("generator points must be pairwise distinct", "degenerate-seeds")
    return s


@dataclass(frozen=True)
class SphericalPartitionSpec:
    generator_points: np.ndarray
    quadrature: object = LatLongGrid()

    def __post_init__(self):
        object.__setattr__(self, "generator_points", _check_seeds(self.generator_points))

    @property
    def cbits(self):
        return math.log2(len(self.generator_points))


@dataclass
class CellMoments:
    """Per-cell probability mass and weighted Bloch-vector sum."""

    mass: np.ndarray
    vector: np.ndarray
    stderr: float
    far_point: np.ndarray

    @property
    def value(self):
        return float(0.5 * (1 + np.linalg.norm(self.vector, axis=1).sum()))

    @property
    def areas(self):
        return self.mass * FOUR_PI

    @property
    def mean_lengths(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.mass > 0, np.linalg.norm(self.vector, axis=1) / self.mass, 0.0)


def cell_moments(seeds, quadrature):
    """Assign quadrature nodes to the nearest generator and integrate.

    Ties go to the lowest generator index. Also reports the node farthest
    from every generator, used to reseed empty cells.
    """
    k = len(seeds)
    mass = np.zeros(k)
    vec = np.zeros((k, 3))
    far_dot, far_pt = np.inf, None
    stash = []
    for pts, w in quadrature.chunks():
        dots = pts @ seeds.T
        lab = np.argmax(dots, axis=1)
        best = dots[np.arange(len(pts)), lab]
        j = int(np.argmin(best))
        if best[j] < far_dot:
            far_dot, far_pt = best[j], pts[j].copy()
        mass += np.bincount(lab, weights=w, minlength=k)
        for axis in range(3):
            vec[:, axis] += np.bincount(lab, weights=w * pts[:, axis], minlength=k)
        if quadrature.stochastic:
            stash.append((pts, lab))
    stderr = 0.0
    if quadrature.stochastic:
        norms = np.linalg.norm(vec, axis=1)
        dirs = np.divide(vec, norms[:, None], out=np.zeros_like(vec), where=norms[:, None] > 0)
        g = np.concatenate([np.einsum("ij,ij->i", pts, dirs[lab]) for pts, lab in stash])
        stderr = float(0.5 * g.std(ddof=1) / math.sqrt(len(g)))
    return CellMoments(mass, vec, stderr, far_pt)


def voronoi_lower_bound(spec):
    """Fidelity of the geodesic Voronoi partition and its quadrature stderr.

    The standard error is zero for deterministic grids.
    """
    m = cell_moments(spec.generator_points, spec.quadrature)
    return m.value, m.stderr


def lloyd_refine(seeds, iterations, quadrature):
    """Alternate Voronoi assignment with moving each generator to its cell's
    mean direction. With fixed nodes the value never decreases.

    A generator whose cell is empty is moved to the node farthest from all
    generators.
    """
    s = _check_seeds(seeds)
    trace = []
    for it in range(iterations + 1):
        m = cell_moments(s, quadrature)
        trace.append(m.value)
        if it == iterations:
            break
        norms = np.linalg.norm(m.vector, axis=1)
        new = s.copy()
        filled = norms > 0
        new[filled] = m.vector[filled] / norms[filled, None]
        for idx in np.flatnonzero(~filled):
            new[idx] = m.far_point
        s = new
    return s, trace
