"""Poisson deployments, first/second-order Voronoi association and the typical-user scene.

All positions are in meters. The typical user sits at the window center, which is the
origin in every scene built here (Slivnyak reduction).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import EdgeEffectError, GeometryError, ParameterError

__all__ = [
    "Window",
    "NetworkRealization",
    "TypicalUserContext",
    "sample_ppp",
    "sample_network",
    "associate",
    "nearest_two",
    "neighbor_count",
    "build_typical_context",
    "sample_kprime",
    "default_window_radius",
]


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Window:
    """Disk-shaped observation window."""

    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise ParameterError(f"window radius must be positive, got {self.radius}")

    @property
    def area(self):
        return np.pi * self.radius**2

    def contains(self, points):
        points = np.atleast_2d(points)
        c = np.asarray(self.center, dtype=float)
        return np.hypot(*(points - c).T) <= self.radius * (1 + 1e-12)


def default_window_radius(bs_density):
    """Simulation window radius: 30 km at 1 BS/km^2, scaled with the mean cell size.

    At this radius the interference mass left outside the window is below 0.1% of
    the mean for path-loss exponents of 3.8 and above.
    """
    return 30_000.0 * float(np.sqrt(1e-6 / bs_density))


def sample_ppp(density, window, seed=None):
    """Homogeneous PPP of ``density`` points per m^2 inside a disk window.

    Returns an ``(n, 2)`` array; ``n`` is Poisson with mean ``density * window.area``.
    """
    if not np.isfinite(density) or density < 0:
        raise ParameterError(f"density must be finite and non-negative, got {density}")
    rng = _rng(seed)
    n = rng.poisson(density * window.area)
    r = window.radius * np.sqrt(rng.random(n))
    phi = 2 * np.pi * rng.random(n)
    pts = np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    return pts + np.asarray(window.center, dtype=float)


@dataclass
class NetworkRealization:
    bs_positions: np.ndarray
    ue_positions: np.ndarray
    bs_density: float
    ue_density: float
    window: Window
    seed: int | None = None

    def __post_init__(self):
        if not self.bs_density > 0:
            raise ParameterError("bs_density must be positive")
        self.bs_positions = np.asarray(self.bs_positions, dtype=float).reshape(-1, 2)
        self.ue_positions = np.asarray(self.ue_positions, dtype=float).reshape(-1, 2)


def sample_network(bs_density, window, seed=None, ue_density=0.0):
    """Draw independent BS and (optionally) candidate-UE processes in ``window``."""
    if isinstance(seed, np.random.Generator):
        bs_rng = ue_rng = seed
        seed = None
    else:
        bs_seed, ue_seed = np.random.SeedSequence(seed).spawn(2)
        bs_rng, ue_rng = np.random.default_rng(bs_seed), np.random.default_rng(ue_seed)
    bs = sample_ppp(bs_density, window, bs_rng)
    ue = sample_ppp(ue_density, window, ue_rng) if ue_density > 0 else np.empty((0, 2))
    return NetworkRealization(bs, ue, bs_density, ue_density, window, seed)


def associate(bs_positions, ue_position):
    """Nearest and second-nearest BS of one user.

    Returns ``(nearest_index, t, second_index, s)`` with ``t <= s``; ties go to the
    lower index.
    """
    bs = np.asarray(bs_positions, dtype=float).reshape(-1, 2)
    if len(bs) < 2:
        raise GeometryError("second-nearest BS is undefined with fewer than two BSs")
    d = np.hypot(*(bs - np.asarray(ue_position, dtype=float)).T)
    order = np.argsort(d, kind="stable")
    i, j = int(order[0]), int(order[1])
    return i, float(d[i]), j, float(d[j])


def nearest_two(bs_positions, ue_positions, tree=None):
    """Vectorized nearest/second-nearest indices and distances for many users."""
    bs = np.asarray(bs_positions, dtype=float).reshape(-1, 2)
    ue = np.asarray(ue_positions, dtype=float).reshape(-1, 2)
    if len(bs) < 2:
        raise GeometryError("second-nearest BS is undefined with fewer than two BSs")
    if len(ue) == 0:
        empty_i = np.empty(0, dtype=int)
        empty_d = np.empty(0)
        return empty_i, empty_d, empty_i, empty_d
    tree = cKDTree(bs) if tree is None else tree
    d, idx = tree.query(ue, k=2)
    return idx[:, 0], d[:, 0], idx[:, 1], d[:, 1]


def neighbor_count(bs_positions, ue_positions, bs_index):
    """Number of users whose second-nearest BS is ``bs_index`` (the K' of that BS)."""
    bs = np.asarray(bs_positions, dtype=float).reshape(-1, 2)
    if not 0 <= bs_index < len(bs):
        raise ParameterError(f"bs_index {bs_index} out of range for {len(bs)} BSs")
    _, _, second, _ = nearest_two(bs, ue_positions)
    return int(np.count_nonzero(second == bs_index))


# ---------------------------------------------------------------------------
# local Voronoi machinery


def _circumradii(points, simplices):
    a, b, c = (points[simplices[:, k]] for k in range(3))
    ab = np.hypot(*(a - b).T)
    bc = np.hypot(*(b - c).T)
    ca = np.hypot(*(c - a).T)
    cross = np.abs((b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0])
    with np.errstate(divide="ignore"):
        return ab * bc * ca / (2.0 * cross)


class _LocalVoronoi:
    """Voronoi cells of the innermost BSs, valid wherever the local set is complete."""

    def __init__(self, sorted_pts, sorted_dist, n_local, window_radius):
        n = len(sorted_pts)
        self.n_local = min(n_local, n)
        self.pts = sorted_pts[: self.n_local]
        self.window_radius = window_radius
        # distance of the closest BS left out of the local set
        self.outside = sorted_dist[self.n_local] if self.n_local < n else np.inf
        if self.n_local < 3:
            raise GeometryError("at least three BSs are needed to build bounded cells")
        tri = Delaunay(self.pts)
        self.indptr, self.indices = tri.vertex_neighbor_vertices
        self.hull = np.zeros(self.n_local, dtype=bool)
        self.hull[np.unique(tri.convex_hull)] = True
        radii = _circumradii(self.pts, tri.simplices)
        self.bound = np.zeros(self.n_local)
        for k in range(3):
            np.maximum.at(self.bound, tri.simplices[:, k], radii)
        self.tree = cKDTree(self.pts)

    def neighbors(self, b):
        return self.indices[self.indptr[b]: self.indptr[b + 1]]

    def check(self, b):
        """Raise unless cell ``b`` is bounded, complete, and inside the window."""
        if b >= self.n_local or self.hull[b]:
            return False
        reach = np.hypot(*self.pts[b]) + self.bound[b]
        if reach > self.window_radius:
            raise EdgeEffectError(f"cell of BS {b} reaches the window boundary")
        return reach + self.bound[b] < self.outside

    def sample(self, b, m, rng):
        """``m`` points uniform in cell ``b`` by rejection from its bounding disk."""
        return self.sample_many([b], [m], rng)[0]

    def sample_many(self, cells, counts, rng):
        """Uniform points in several cells at once; returns one array per cell."""
        cells = np.asarray(cells, dtype=int)
        need = np.asarray(counts, dtype=int).copy()
        pts, owners = [], []
        while need.any():
            active = np.flatnonzero(need > 0)
            owner = np.repeat(active, np.maximum(8, 3 * need[active]))
            r = self.bound[cells[owner]] * np.sqrt(rng.random(len(owner)))
            phi = 2 * np.pi * rng.random(len(owner))
            cand = self.pts[cells[owner]] + np.column_stack((r * np.cos(phi), r * np.sin(phi)))
            _, idx = self.tree.query(cand, k=1)
            keep = idx == cells[owner]
            owner, cand = owner[keep], cand[keep]
            # owner is sorted, so the rank within each cell is a running offset
            start = np.searchsorted(owner, owner)
            take = (np.arange(len(owner)) - start) < need[owner]
            owner, cand = owner[take], cand[take]
            need -= np.bincount(owner, minlength=len(cells))
            pts.append(cand)
            owners.append(owner)
        pts = np.concatenate(pts) if pts else np.empty((0, 2))
        owners = np.concatenate(owners) if owners else np.empty(0, dtype=int)
        order = np.argsort(owners, kind="stable")
        bounds = np.searchsorted(owners[order], np.arange(len(cells) + 1))
        pts = pts[order]
        return [pts[bounds[k]: bounds[k + 1]] for k in range(len(cells))]


@dataclass
class TypicalUserContext:
    """Scene seen by the typical user at the origin.

    BS indices in the array-valued fields refer to BSs sorted by distance from the
    typical user (0 = serving, 1 = second nearest). ``serving_bs`` and ``second_bs``
    hold the indices into the original realization.
    """

    position: np.ndarray
    serving_bs: int
    second_bs: int
    t: float
    s: float
    cell_mates: np.ndarray
    kprime_serving: int | None
    K: int
    bs_positions: np.ndarray = field(repr=False)
    bs_distances: np.ndarray = field(repr=False)
    bs_order: np.ndarray = field(repr=False)
    ue_positions: np.ndarray = field(repr=False)
    ue_nearest: np.ndarray = field(repr=False)
    ue_second: np.ndarray = field(repr=False)
    n_exact: int = 0
    populated: frozenset = frozenset()

    TYPICAL = 0

    @property
    def exact_bs(self):
        return np.arange(min(self.n_exact + 1, len(self.bs_distances)))

    @property
    def far_distances(self):
        """Distances to interferers outside the exactly-modelled set."""
        return self.bs_distances[len(self.exact_bs):]

    @property
    def rk(self):
        return self.cell_mates

    def served(self, b):
        if b not in self.populated:
            raise GeometryError(f"cell {b} was not populated")
        return np.flatnonzero(self.ue_nearest == b)

    def neighbors(self, b):
        """Users for which ``b`` is second nearest, closest to ``b`` first."""
        ids = np.flatnonzero(self.ue_second == b)
        return ids[np.argsort(self.link_distance(b, ids), kind="stable")]

    def kprime(self, b):
        return int(np.count_nonzero(self.ue_second == b))

    def link_distance(self, b, ue_ids):
        ue_ids = np.asarray(ue_ids, dtype=int)
        return np.hypot(*(self.ue_positions[ue_ids] - self.bs_positions[b]).T)


def _schedule(vor, b, m, rng, candidates):
    if candidates is None or len(candidates) == 0:
        return vor.sample(b, m, rng)
    c = candidates[np.hypot(*(candidates - vor.pts[b]).T) <= vor.bound[b]]
    if len(c):
        _, idx = vor.tree.query(c, k=1)
        c = c[idx == b]
    if len(c) >= m:
        return c[rng.choice(len(c), size=m, replace=False)]
    return np.concatenate([c, vor.sample(b, m - len(c), rng)])


def build_typical_context(realization, K, rng=None, n_exact=10, with_neighbors=True, n_local=None):
    """Place the typical user at the window center and schedule users around it.

    Each populated cell receives ``K`` scheduled users drawn uniformly in the cell
    (the serving cell gets the typical user plus ``K - 1`` cell mates). When the
    realization carries candidate users, scheduled users are picked among them and
    topped up uniformly if a cell holds fewer than needed.

    With ``with_neighbors`` the cells adjacent to every exactly-modelled BS are also
    populated, so neighbor sets (and K') of those BSs are complete.
    """
    if K < 1:
        raise ParameterError("K must be at least 1")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([0 if realization.seed is None else realization.seed, 7]))
    center = np.asarray(realization.window.center, dtype=float)
    bs = realization.bs_positions - center
    if len(bs) < 2:
        raise GeometryError("fewer than two BSs in the window")
    dist = np.hypot(*bs.T)
    order = np.argsort(dist, kind="stable")
    bs_sorted, d_sorted = bs[order], dist[order]
    cands = realization.ue_positions - center if len(realization.ue_positions) else None

    n_exact = int(min(n_exact, len(bs) - 1))
    exact = list(range(n_exact + 1))
    need_cells = K > 1 or with_neighbors

    ue_blocks = [np.zeros((1, 2))]
    populated = set()
    kprime = None
    if need_cells:
        size = n_local or 8 * (n_exact + 1) + 64
        while True:
            vor = _LocalVoronoi(bs_sorted, d_sorted, size, realization.window.radius)
            cells = set(exact)
            if with_neighbors:
                for b in exact:
                    cells.update(int(x) for x in vor.neighbors(b))
            ok = all(vor.check(b) for b in cells)
            if ok:
                break
            if vor.n_local == len(bs_sorted):
                raise EdgeEffectError("window too small to complete the cells around the typical user")
            size *= 2
        cells = sorted(cells)
        counts = [K - 1 if b == 0 else K for b in cells]
        if cands is None:
            ue_blocks.extend(vor.sample_many(cells, counts, rng))
        else:
            ue_blocks.extend(_schedule(vor, b, m, rng, cands) for b, m in zip(cells, counts))
        populated.update(cells)
        ue = np.concatenate(ue_blocks)
        nearest, _, second, _ = nearest_two(vor.pts, ue, tree=vor.tree)
    else:
        ue = ue_blocks[0]
        nearest = np.zeros(1, dtype=int)
        second = np.ones(1, dtype=int)
        populated.add(0)
    nearest[0], second[0] = 0, 1
    mates = np.flatnonzero(nearest == 0)[1:]
    cell_mates = np.hypot(*(ue[mates] - bs_sorted[0]).T)
    if with_neighbors:
        kprime = int(np.count_nonzero(second == 0))
    return TypicalUserContext(
        position=center.copy(),
        serving_bs=int(order[0]),
        second_bs=int(order[1]),
        t=float(d_sorted[0]),
        s=float(d_sorted[1]),
        cell_mates=cell_mates,
        kprime_serving=kprime,
        K=K,
        bs_positions=bs_sorted,
        bs_distances=d_sorted,
        bs_order=order,
        ue_positions=ue,
        ue_nearest=nearest,
        ue_second=second,
        n_exact=n_exact,
        populated=frozenset(populated),
    )


def sample_kprime(K, bs_density, rng, window_radius=None):
    """One draw of K' for a typical BS (Palm): a BS at the origin plus an independent PPP.

    Every cell adjacent to the origin BS schedules ``K`` users uniformly; the count of
    those whose second-nearest BS is the origin BS is returned.
    """
    rng = _rng(rng)
    radius = window_radius or 10.0 / np.sqrt(np.pi * bs_density)
    window = Window(radius)
    while True:
        pts = np.vstack([np.zeros((1, 2)), sample_ppp(bs_density, window, rng)])
        if len(pts) < 8:
            continue
        d = np.hypot(*pts.T)
        try:
            vor = _LocalVoronoi(pts, d, len(pts), radius)
            cells = [int(x) for x in vor.neighbors(0)]
            if not all(vor.check(b) for b in [0, *cells]):
                continue
        except EdgeEffectError:
            continue
        ue = np.concatenate(vor.sample_many(cells, [K] * len(cells), rng))
        _, _, second, _ = nearest_two(vor.pts, ue, tree=vor.tree)
        return int(np.count_nonzero(second == 0))
