"""Jordan domains from sampled boundary curves, and their multiscale geometry.

Curves are closed parameterizations sampled at M uniform nodes on the
circle; domains add membership tests, Lipschitz windows, Whitney
coverings, chains between cubes and shadows.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .grid import GridSpec, RegionMask


def _trig_matrix_eval(coeffs, tv):
    """Evaluate a trigonometric polynomial sum c_k e^{ikt} at arbitrary t."""
    M = len(coeffs)
    k = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    tv = np.atleast_1d(np.asarray(tv, dtype=float))
    out = np.zeros(tv.shape, dtype=complex)
    block = 4096
    for lo in range(0, tv.size, block):
        sl = slice(lo, min(lo + block, tv.size))
        out.ravel()[sl] = np.exp(1j * np.outer(tv.ravel()[sl], k)) @ coeffs
    return out


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed curve gamma: T -> C sampled at t_j = 2 pi j / M, with derivatives."""

    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        d = np.asarray(self.derivs, dtype=complex)
        if v.ndim != 1 or v.shape != d.shape:
            raise ValueError("values and derivs must be 1-d arrays of equal length")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivs", d)

    @property
    def M(self) -> int:
        return len(self.values)

    @property
    def t(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    @classmethod
    def from_function(cls, fn, M=1024, dfn=None):
        t = 2 * np.pi * np.arange(M) / M
        vals = np.asarray(fn(t), dtype=complex)
        if dfn is not None:
            der = np.asarray(dfn(t), dtype=complex)
        else:
            k = np.fft.fftfreq(M, d=1.0 / M).astype(int)
            der = np.fft.ifft(np.fft.fft(vals) * 1j * k)
        return cls(vals, der)

    @classmethod
    def circle(cls, radius=1.0, center=0.0, M=1024):
        return cls.from_function(
            lambda t: center + radius * np.exp(1j * t),
            M,
            lambda t: 1j * radius * np.exp(1j * t),
        )

    @classmethod
    def perturbed_circle(cls, eps=0.1, k=2, M=1024):
        return cls.from_function(
            lambda t: np.exp(1j * t) + eps * np.exp(1j * k * t),
            M,
            lambda t: 1j * np.exp(1j * t) + 1j * k * eps * np.exp(1j * k * t),
        )

    @classmethod
    def ellipse(cls, a=2.0, b=1.0, M=1024):
        return cls.from_function(
            lambda t: a * np.cos(t) + 1j * b * np.sin(t),
            M,
            lambda t: -a * np.sin(t) + 1j * b * np.cos(t),
        )

    def coeffs(self) -> np.ndarray:
        return np.fft.fft(self.values) / self.M

    def eval(self, tv) -> np.ndarray:
        return _trig_matrix_eval(self.coeffs(), tv)

    def eval_deriv(self, tv) -> np.ndarray:
        k = np.fft.fftfreq(self.M, d=1.0 / self.M).astype(int)
        return _trig_matrix_eval(self.coeffs() * 1j * k, tv)

    def resample(self, M2: int) -> "BoundaryCurve":
        t2 = 2 * np.pi * np.arange(M2) / M2
        return BoundaryCurve(self.eval(t2), self.eval_deriv(t2))

    def length(self) -> float:
        return float(np.abs(self.derivs).mean() * 2 * np.pi)

    def spacing(self) -> float:
        return float(np.abs(np.roll(self.values, -1) - self.values).max())

    def signed_area(self) -> float:
        # (1/2) Im oint conj(gamma) dgamma; positive for ccw orientation
        return float(0.5 * np.imag(np.conj(self.values) @ self.derivs) * 2 * np.pi / self.M)

    def is_positively_oriented(self) -> bool:
        return self.signed_area() > 0

    def reversed(self) -> "BoundaryCurve":
        return BoundaryCurve(self.values[::-1].copy(), -self.derivs[::-1].copy())

    def normals(self) -> np.ndarray:
        """Outward unit normal at the nodes (curve positively oriented)."""
        tang = self.derivs / np.abs(self.derivs)
        return -1j * tang

    def bilipschitz_constants(self, samples=4000, seed=0) -> tuple[float, float]:
        """Sampled lower/upper ratios |gamma(ti)-gamma(tj)| / d_T(ti, tj)."""
        rng = np.random.default_rng(seed)
        i = rng.integers(0, self.M, samples)
        j = rng.integers(0, self.M, samples)
        keep = i != j
        i, j = i[keep], j[keep]
        dt = np.abs(self.t[i] - self.t[j])
        dt = np.minimum(dt, 2 * np.pi - dt)
        ratio = np.abs(self.values[i] - self.values[j]) / dt
        return float(ratio.min()), float(ratio.max())

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,re,im,re_deriv,im_deriv\n")
            for t, v, d in zip(self.t, self.values, self.derivs):
                fh.write(f"{t:.17g},{v.real:.17g},{v.imag:.17g},{d.real:.17g},{d.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path):
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        vals = rows[:, 1] + 1j * rows[:, 2]
        if rows.shape[1] >= 5:
            return cls(vals, rows[:, 3] + 1j * rows[:, 4])
        k = np.fft.fftfreq(len(vals), d=1.0 / len(vals)).astype(int)
        return cls(vals, np.fft.ifft(np.fft.fft(vals) * 1j * k))


def arc_length_reparameterize(curve: BoundaryCurve) -> BoundaryCurve:
    """Reparameterize by arc length: output has |gamma'| = length/(2 pi)."""
    speed = np.abs(curve.derivs)
    if speed.min() < 1e-12 * speed.max():
        raise ValueError("derivative vanishes at a node")
    M = curve.M
    sp_hat = np.fft.fft(speed) / M
    c0 = sp_hat[0].real
    ell = 2 * np.pi * c0
    k = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    per = np.zeros(M, dtype=complex)
    per[k != 0] = sp_hat[k != 0] / (1j * k[k != 0])

    def cumlen(tv):
        ph = np.exp(1j * np.outer(tv, k[k != 0]))
        return c0 * tv + (ph @ per[k != 0]).real - per[k != 0].sum().real

    targets = ell * np.arange(M) / M
    tv = targets / c0
    t_nodes = curve.t
    for _ in range(60):
        resid = cumlen(tv) - targets
        tv = tv - resid / np.interp(np.mod(tv, 2 * np.pi), t_nodes, speed, period=2 * np.pi)
        if np.abs(resid).max() < 1e-14 * max(ell, 1.0):
            break
    vals = curve.eval(tv)
    speed_at = np.abs(curve.eval_deriv(tv))
    ders = curve.eval_deriv(tv) / speed_at * (ell / (2 * np.pi))
    return BoundaryCurve(vals, ders)


@dataclass(frozen=True)
class Window:
    """Local Lipschitz window: rotated graph y = A(x) around a boundary point."""

    center: complex
    angle: float
    eps_delta: float
    R: float
    delta: float
    xs: np.ndarray
    ys: np.ndarray
    graph: CubicSpline = field(repr=False)

    def A(self, x):
        return self.graph(np.clip(x, self.xs[0], self.xs[-1]))

    def A_prime(self, x):
        return self.graph(np.clip(x, self.xs[0], self.xs[-1]), 1)

    def to_plane(self, x, y=None):
        """Map window coordinates (x, A(x)) back to the plane."""
        y = self.A(x) if y is None else y
        return self.center + np.exp(1j * self.angle) * (np.asarray(x) + 1j * np.asarray(y))

    def line_to_plane(self, a, b):
        """Map the graph line y = a + b x back to a (point, direction) pair."""
        p = self.center + np.exp(1j * self.angle) * (1j * a)
        d = np.exp(1j * self.angle) * (1 + 1j * b)
        return p, d / abs(d)


class WindowProjectionError(ValueError):
    pass


@dataclass
class JordanDomain:
    """Simply connected planar domain bounded by one Jordan curve."""

    curve: BoundaryCurve
    kind: str = "generic"
    vertices: np.ndarray | None = None
    _dense: np.ndarray | None = field(default=None, repr=False)
    _star: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.curve.is_positively_oriented():
            self.curve = self.curve.reversed()

    @classmethod
    def disc(cls, radius=1.0, center=0.0, M=1024):
        d = cls(BoundaryCurve.circle(radius, center, M), kind="disc")
        d.radius, d.center = radius, center
        return d

    @classmethod
    def perturbed_disc(cls, eps=0.1, k=2, M=1024):
        return cls(BoundaryCurve.perturbed_circle(eps, k, M), kind="starshaped")

    @classmethod
    def ellipse(cls, a=2.0, b=1.0, M=1024):
        d = cls(BoundaryCurve.ellipse(a, b, M), kind="starshaped")
        return d

    @classmethod
    def polygon(cls, vertices, nodes_per_edge=256):
        verts = np.asarray(vertices, dtype=complex)
        segs = np.roll(verts, -1) - verts
        pts, ders = [], []
        for v, s in zip(verts, segs):
            u = np.arange(nodes_per_edge) / nodes_per_edge
            pts.append(v + u * s)
            ders.append(np.full(nodes_per_edge, s * len(verts) * nodes_per_edge / (2 * np.pi)))
        d = cls(BoundaryCurve(np.concatenate(pts), np.concatenate(ders)), kind="polygon",
                vertices=verts)
        return d

    # -- membership ---------------------------------------------------------
    def _star_table(self):
        if self._star is None:
            g = self.curve.values
            ang = np.angle(g)
            order = np.argsort(ang)
            self._star = (ang[order], np.abs(g)[order])
        return self._star

    def inside(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.kind == "disc":
            return np.abs(z - self.center) < self.radius
        if self.kind == "starshaped":
            ang, rad = self._star_table()
            return np.abs(z) < np.interp(np.angle(z), ang, rad, period=2 * np.pi)
        if self.kind == "polygon":
            return _polygon_inside(self.vertices, z)
        return self.winding_inside(z)[0]

    def winding_inside(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Winding-number membership with an indeterminate flag near the boundary."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        g, gp, M = self.curve.values, self.curve.derivs, self.curve.M
        wind = np.empty(z.shape)
        block = max(1, 2**22 // M)
        for lo in range(0, z.size, block):
            sl = slice(lo, min(lo + block, z.size))
            diff = g[None, :] - z.ravel()[sl, None]
            wind.ravel()[sl] = np.imag((gp[None, :] / diff).sum(axis=1)) * (1.0 / M)
        near = self.boundary_distance(z) < 2 * self.curve.spacing()
        return np.abs(wind - 1) < 0.5, near

    def boundary_points(self, M=8192) -> np.ndarray:
        if self._dense is None or len(self._dense) < M:
            if self.kind == "polygon":
                self._dense = self.curve.values
            else:
                self._dense = self.curve.resample(max(M, self.curve.M)).values
        return self._dense

    def boundary_distance(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.kind == "disc":
            return np.abs(np.abs(z - self.center) - self.radius)
        if self.kind == "polygon":
            return _polygon_boundary_distance(self.vertices, z)
        pts = self.boundary_points()
        tree = _point_tree(pts)
        d, _ = tree.query(np.column_stack([z.real, z.imag]))
        return d

    def mask(self, spec: GridSpec, name=None) -> RegionMask:
        bits = self.inside(spec.zgrid().ravel()).reshape(spec.n, spec.n)
        return RegionMask(spec, bits, name or f"domain[{self.kind}]")

    def diameter(self) -> float:
        v = self.curve.values
        return float(max(v.real.max() - v.real.min(), v.imag.max() - v.imag.min()))

    def area(self) -> float:
        return abs(self.curve.signed_area())


_TREES = {}


def _point_tree(pts: np.ndarray) -> cKDTree:
    key = (pts.shape[0], pts[0], pts[-1], pts[pts.shape[0] // 2])
    tree = _TREES.get(key)
    if tree is None:
        tree = cKDTree(np.column_stack([pts.real, pts.imag]))
        if len(_TREES) > 32:
            _TREES.clear()
        _TREES[key] = tree
    return tree


def _polygon_inside(verts, z):
    x, y = z.real, z.imag
    inside = np.zeros(z.shape, dtype=bool)
    vx, vy = verts.real, verts.imag
    n = len(verts)
    for i in range(n):
        x1, y1 = vx[i], vy[i]
        x2, y2 = vx[(i + 1) % n], vy[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(invalid="ignore", divide="ignore"):
            xint = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
        inside ^= crosses & (x < xint)
    return inside


def _segment_point_distance(a, b, z):
    ab = b - a
    tt = np.clip(((z - a) * np.conj(ab)).real / abs(ab) ** 2, 0.0, 1.0)
    return np.abs(z - (a + tt * ab))


def _polygon_boundary_distance(verts, z):
    d = np.full(z.shape, np.inf)
    n = len(verts)
    for i in range(n):
        d = np.minimum(d, _segment_point_distance(verts[i], verts[(i + 1) % n], z))
    return d


# -- Lipschitz windows -------------------------------------------------------

def build_windows(domain: JordanDomain, R: float, delta: float,
                  max_delta: float = 10.0, samples_per_window: int = 129) -> list[Window]:
    """Greedy boundary cover by rotated Lipschitz graph windows.

    Centers are chosen so the radius eps_delta/12 balls are disjoint while
    the doubled balls cover the boundary; each window resolves the nearby
    boundary as a single-valued graph with sampled slope <= delta. When the
    projection is not single-valued the slope budget is increased and the
    build retried, up to max_delta.
    """
    while True:
        try:
            return _build_windows_once(domain, R, delta, samples_per_window)
        except WindowProjectionError:
            if delta >= max_delta:
                raise
            delta = min(2 * delta, max_delta)


def _build_windows_once(domain, R, delta, nsamp):
    eps_d = R / np.sqrt(1 + delta**2)
    curve = domain.curve
    dense = curve if curve.M >= 2048 and domain.kind != "polygon" else (
        curve if domain.kind == "polygon" else curve.resample(2048))
    pts = dense.values
    ders = dense.derivs
    M = len(pts)

    # greedy centers along the curve: consecutive gaps <= eps_d/6 and
    # pairwise separations >= eps_d/6 give disjoint /12-balls and covering
    # doubled balls
    centers_idx = [0]
    for j in range(1, M):
        if np.all(np.abs(pts[j] - pts[centers_idx]) >= eps_d / 6):
            if np.abs(pts[j] - pts[centers_idx[-1]]) >= eps_d / 8:
                centers_idx.append(j)
    windows = []
    for j in centers_idx:
        x0 = pts[j]
        # frame by the mean tangent over the window: at a corner this picks
        # the bisector, keeping both edges inside the slope budget
        in_ball = np.abs(pts - x0) <= R
        tang = (ders[in_ball] / np.abs(ders[in_ball])).mean()
        if abs(tang) < 0.1:
            tang = ders[j] / abs(ders[j])
        angle = float(np.angle(tang))
        rot = np.exp(-1j * angle)
        local = (pts - x0) * rot
        near = (np.abs(local.real) <= eps_d * 1.05) & (np.abs(local.imag) <= R)
        lx, ly = local.real[near], local.imag[near]
        order = np.argsort(lx)
        lx, ly = lx[order], ly[order]
        dup = np.diff(lx) <= 1e-12
        if dup.any():
            keep = np.concatenate([[True], ~dup])
            lx, ly = lx[keep], ly[keep]
        if len(lx) < 8 or lx[0] > -eps_d or lx[-1] < eps_d:
            raise WindowProjectionError(f"window at {x0:.3f} does not span its base")
        # single-valuedness: the projected boundary must advance monotonically
        proj = local.real[near]
        if np.abs(np.diff(ly) / np.maximum(np.diff(lx), 1e-12)).max() > 2 * delta:
            raise WindowProjectionError(f"slope budget exceeded at {x0:.3f}")
        spline = CubicSpline(lx, ly)
        xs = np.linspace(-eps_d, eps_d, nsamp)
        ys = spline(xs)
        if np.abs(spline(xs, 1)).max() > delta * 1.2:
            raise WindowProjectionError(f"sampled slope exceeds delta at {x0:.3f}")
        windows.append(Window(x0, angle, eps_d, R, delta, xs, ys, spline))
    # audit: doubled balls cover the boundary
    centers = np.array([w.center for w in windows])
    gap = np.min(np.abs(pts[:, None] - centers[None, :]), axis=1)
    if gap.max() > eps_d / 6:
        raise WindowProjectionError("window centers fail to cover the boundary")
    return windows


# -- Whitney machinery -------------------------------------------------------

@dataclass(frozen=True)
class WhitneyCube:
    level: int
    i: int
    j: int
    side: float
    center: complex
    dist: float

    def corner(self) -> complex:
        return self.center - (self.side / 2) * (1 + 1j)

    def rect(self):
        c = self.corner()
        return (c.real, c.imag, c.real + self.side, c.imag + self.side)

    def dilated_rect(self, factor):
        half = self.side * factor / 2
        return (self.center.real - half, self.center.imag - half,
                self.center.real + half, self.center.imag + half)


def _rect_point_distance(rect, z):
    x0, y0, x1, y1 = rect
    dx = np.maximum(np.maximum(x0 - z.real, z.real - x1), 0.0)
    dy = np.maximum(np.maximum(y0 - z.imag, z.imag - y1), 0.0)
    return np.hypot(dx, dy)


def _rects_touch(r1, r2, tol=1e-12):
    return (r1[0] <= r2[2] + tol and r2[0] <= r1[2] + tol
            and r1[1] <= r2[3] + tol and r2[1] <= r1[3] + tol)


def rect_contains_rect(outer, inner, tol=1e-12):
    return (outer[0] <= inner[0] + tol and outer[1] <= inner[1] + tol
            and outer[2] >= inner[2] - tol and outer[3] >= inner[3] - tol)


@dataclass
class WhitneyCovering:
    cubes: list
    c_whitney: float
    base_origin: complex
    base_side: float
    floor_level: int
    domain: JordanDomain
    neighbors: list = field(default_factory=list)

    @property
    def sides(self):
        return np.array([q.side for q in self.cubes])

    @property
    def centers(self):
        return np.array([q.center for q in self.cubes])

    @property
    def dists(self):
        return np.array([q.dist for q in self.cubes])

    def floor_side(self) -> float:
        return self.base_side / 2**self.floor_level

    def total_area(self) -> float:
        return float((self.sides**2).sum())

    def overlap_count(self, factor=50.0, probes=200, seed=0) -> int:
        """Max multiplicity of the dilated family over sampled domain points."""
        rng = np.random.default_rng(seed)
        pts = self.centers[rng.integers(0, len(self.cubes), probes)]
        cx, cy, half = self.centers.real, self.centers.imag, self.sides * factor / 2
        best = 0
        for z in pts:
            hit = (np.abs(z.real - cx) <= half) & (np.abs(z.imag - cy) <= half)
            best = max(best, int(hit.sum()))
        return best

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("level,i,j,side,dist\n")
            for q in self.cubes:
                fh.write(f"{q.level},{q.i},{q.j},{q.side:.17g},{q.dist:.17g}\n")


def _boundary_rect_distance(domain, rect):
    if domain.kind == "polygon":
        return _polygon_rect_distance(domain.vertices, rect)
    pts = domain.boundary_points()
    return float(_rect_point_distance(rect, pts).min())


def _cross2(a, b):
    return a.real * b.imag - a.imag * b.real


def _segments_distance(p1, p2, q1, q2):
    def seg_int(a1, a2, b1, b2):
        d1 = _cross2(a2 - a1, b1 - a1)
        d2 = _cross2(a2 - a1, b2 - a1)
        d3 = _cross2(b2 - b1, a1 - b1)
        d4 = _cross2(b2 - b1, a2 - b1)
        return (d1 * d2 < 0) and (d3 * d4 < 0)

    if seg_int(p1, p2, q1, q2):
        return 0.0
    cands = [
        _segment_point_distance(p1, p2, np.atleast_1d(q1))[0],
        _segment_point_distance(p1, p2, np.atleast_1d(q2))[0],
        _segment_point_distance(q1, q2, np.atleast_1d(p1))[0],
        _segment_point_distance(q1, q2, np.atleast_1d(p2))[0],
    ]
    return float(min(cands))


def _polygon_rect_distance(verts, rect):
    x0, y0, x1, y1 = rect
    corners = [x0 + 1j * y0, x1 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1]
    edges = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    best = np.inf
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if _rect_point_distance(rect, np.atleast_1d(a))[0] == 0.0:
            return 0.0
        for e in edges:
            best = min(best, _segments_distance(a, b, e[0], e[1]))
            if best == 0.0:
                return 0.0
    return float(best)


def whitney_covering(domain: JordanDomain, c_whitney: float = 1.0,
                     floor_level: int = 8, max_cubes: int = 10**6) -> WhitneyCovering:
    """Standard dyadic Whitney decomposition.

    Keeps maximal dyadic cubes with C_W l(Q) <= dist(Q, boundary); the upper
    bound dist <= 4 C_W l(Q) then follows from maximality and is audited.
    Subdivision stops at the floor level (reported), whose boundary-layer
    area defect tests account for.
    """
    v = domain.curve.values
    cx = (v.real.min() + v.real.max()) / 2
    cy = (v.imag.min() + v.imag.max()) / 2
    extent = max(v.real.max() - v.real.min(), v.imag.max() - v.imag.min())
    base_side = float(2.0 ** np.ceil(np.log2(extent * 1.001)))
    origin = (cx - base_side / 2) + 1j * (cy - base_side / 2)

    cubes = []
    stack = [(0, 0, 0)]
    count = 0
    while stack:
        level, i, j = stack.pop()
        side = base_side / 2**level
        corner = origin + side * (i + 1j * j)
        rect = (corner.real, corner.imag, corner.real + side, corner.imag + side)
        center = corner + side * (0.5 + 0.5j)
        dist = _boundary_rect_distance(domain, rect)
        if dist > 0 and not domain.inside(center)[0]:
            continue  # fully outside
        if dist >= c_whitney * side and domain.inside(center)[0]:
            cubes.append(WhitneyCube(level, i, j, side, center, dist))
            continue
        if level >= floor_level:
            continue
        count += 4
        if count > max_cubes:
            raise RuntimeError(f"cube budget {max_cubes} exceeded")
        for di in (0, 1):
            for dj in (0, 1):
                stack.append((level + 1, 2 * i + di, 2 * j + dj))

    cov = WhitneyCovering(cubes, c_whitney, origin, base_side, floor_level, domain)
    cov.neighbors = _neighbor_graph(cov)
    return cov


def _neighbor_graph(cov: WhitneyCovering):
    centers = cov.centers
    sides = cov.sides
    tree = cKDTree(np.column_stack([centers.real, centers.imag]))
    smax = sides.max()
    neighbors = [set() for _ in cov.cubes]
    pairs = tree.query_pairs(r=np.sqrt(2) * smax * 1.01)
    for a, b in pairs:
        if _rects_touch(cov.cubes[a].rect(), cov.cubes[b].rect(),
                        tol=1e-9 * min(sides[a], sides[b])):
            neighbors[a].add(b)
            neighbors[b].add(a)
    return neighbors


def long_distance(rect_a, rect_b) -> float:
    """D(A, B) = diam A + diam B + dist(A, B), exact for rectangles."""
    ax0, ay0, ax1, ay1 = rect_a
    bx0, by0, bx1, by1 = rect_b
    diam_a = np.hypot(ax1 - ax0, ay1 - ay0)
    diam_b = np.hypot(bx1 - bx0, by1 - by0)
    dx = max(bx0 - ax1, ax0 - bx1, 0.0)
    dy = max(by0 - ay1, ay0 - by1, 0.0)
    return float(diam_a + diam_b + np.hypot(dx, dy))


def cube_long_distance(q1: WhitneyCube, q2: WhitneyCube) -> float:
    return long_distance(q1.rect(), q2.rect())


@dataclass(frozen=True)
class Chain:
    indices: tuple
    central: int  # position of the central cube within indices

    def __len__(self):
        return len(self.indices)


def chain(cov: WhitneyCovering, qa: int, qb: int) -> Chain:
    """Connect two cubes by a touching-cube chain through a central cube.

    Both ends ascend through touching cubes of maximal side until the cube
    side is comparable to D(Q, S) (or the ascent tops out); a shortest
    bridge through comparably large cubes joins the two ascents.
    """
    if qa == qb:
        return Chain((qa,), 0)
    dqs = cube_long_distance(cov.cubes[qa], cov.cubes[qb])

    def ascend(start):
        path = [start]
        seen = {start}
        while cov.cubes[path[-1]].side < dqs:
            cur = path[-1]
            here = cov.cubes[cur]
            cands = [b for b in cov.neighbors[cur]
                     if b not in seen and cov.cubes[b].side >= here.side]
            if not cands:
                cands = [b for b in cov.neighbors[cur]
                         if b not in seen and cov.cubes[b].dist > here.dist]
            if not cands or len(path) > 64 * (cov.floor_level + 2):
                break
            nxt = max(cands, key=lambda b: (cov.cubes[b].side, cov.cubes[b].dist))
            path.append(nxt)
            seen.add(nxt)
        return path

    up_a = ascend(qa)
    up_b = ascend(qb)
    # truncate both ascents at the earliest touching pair, if any
    meet = None
    for i, ca in enumerate(up_a):
        for j, cb in enumerate(up_b):
            if cb in cov.neighbors[ca] or ca == cb:
                meet = (i, j)
                break
        if meet:
            break
    if meet:
        i, j = meet
        seq = up_a[: i + 1] + ([] if up_a[i] == up_b[j] else []) + list(reversed(up_b[: j + 1]))
        if up_a[i] == up_b[j]:
            seq = up_a[: i + 1] + list(reversed(up_b[:j]))
    else:
        top_a, top_b = up_a[-1], up_b[-1]
        min_side = min(cov.cubes[top_a].side, cov.cubes[top_b].side) / 2
        bridge = _bfs_bridge(cov, top_a, top_b, min_side)
        while bridge is None and min_side > cov.floor_side() / 4:
            min_side /= 2
            bridge = _bfs_bridge(cov, top_a, top_b, min_side)
        if bridge is None:
            raise RuntimeError("covering appears disconnected")
        down_b = list(reversed(up_b))  # starts at top_b
        seq = up_a + bridge[1:] + down_b[1:]
    out = [seq[0]]
    for q in seq[1:]:
        if q != out[-1]:
            out.append(q)
    central = int(np.argmax([cov.cubes[q].side for q in out]))
    return Chain(tuple(out), central)


def _bfs_bridge(cov, a, b, min_side):
    from collections import deque

    if a == b:
        return [a]
    prev = {a: None}
    dq = deque([a])
    while dq:
        cur = dq.popleft()
        for nb in cov.neighbors[cur]:
            if nb in prev or cov.cubes[nb].side < min_side:
                continue
            prev[nb] = cur
            if nb == b:
                path = [b]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return list(reversed(path))
            dq.append(nb)
    return None


def shadow(x: complex, rho: float, domain: JordanDomain, spec: GridSpec) -> RegionMask:
    """Sh(x) = B(x, rho * dist(x, boundary)) intersect Omega, as a grid mask."""
    delta = float(domain.boundary_distance(np.atleast_1d(x))[0])
    z = spec.zgrid()
    ball = np.abs(z - x) < rho * delta
    omega = domain.mask(spec)
    return RegionMask(spec, ball & omega.bits, f"shadow({x:.3g},{rho})")
