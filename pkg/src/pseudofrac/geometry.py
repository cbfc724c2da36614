"""Domains in the plane, cell-centred grids and the max-min boundary distance R_s.

Points are written ``(x, y)`` with ``x`` the first coordinate block and ``y``
the second; only ``n = m = 1`` is supported by the grid builder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, DomainParseError, EmptyGrid, UnsupportedDims

_TOL = 1e-12
DEFAULT_BALL_SAMPLES = 720
DEFAULT_BOUNDARY_SPACING = 2.0 * math.pi / DEFAULT_BALL_SAMPLES


@dataclass(frozen=True)
class DomainSpec:
    """A bounded planar domain: a ball, an axis-aligned rectangle or a union of rectangles."""

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float | None = None
    half_widths: tuple | None = None
    members: tuple = ()
    n: int = 1
    m: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DomainError("block dimensions n and m must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.kind == "ball":
            if self.radius is None or not self.radius > 0 or not math.isfinite(self.radius):
                raise DomainError(f"ball radius must be positive, got {self.radius}")
            object.__setattr__(self, "radius", float(self.radius))
        elif self.kind == "rect":
            hw = tuple(float(w) for w in (self.half_widths or ()))
            if len(hw) != 2 or not all(w > 0 and math.isfinite(w) for w in hw):
                raise DomainError(f"rectangle half widths must be two positive numbers, got {self.half_widths}")
            object.__setattr__(self, "half_widths", hw)
        elif self.kind == "rectunion":
            if not self.members:
                raise DomainError("rectangle union needs at least one member")
            if any(r.kind != "rect" for r in self.members):
                raise DomainError("rectangle union members must be rectangles")
            object.__setattr__(self, "members", tuple(self.members))
            _check_connected(self.members)
        else:
            raise DomainError(f"unknown domain kind {self.kind!r}")

    # constructors -------------------------------------------------------

    @classmethod
    def ball(cls, radius, center=(0.0, 0.0)):
        return cls("ball", center=center, radius=radius)

    @classmethod
    def rect(cls, half_widths, center=(0.0, 0.0)):
        return cls("rect", center=center, half_widths=tuple(half_widths))

    @classmethod
    def rect_union(cls, rects):
        rects = tuple(rects)
        box = _union_bbox(rects)
        return cls("rectunion", center=((box[0] + box[1]) / 2, (box[2] + box[3]) / 2), members=rects)

    # basic geometry -----------------------------------------------------

    def bbox(self):
        """Return ``(xmin, xmax, ymin, ymax)``."""
        cx, cy = self.center
        if self.kind == "ball":
            r = self.radius
            return (cx - r, cx + r, cy - r, cy + r)
        if self.kind == "rect":
            hx, hy = self.half_widths
            return (cx - hx, cx + hx, cy - hy, cy + hy)
        return _union_bbox(self.members)

    def diameter(self):
        if self.kind == "ball":
            return 2.0 * self.radius
        if self.kind == "rect":
            return 2.0 * math.hypot(*self.half_widths)
        corners = np.array([c for r in self.members for c in r.corners()])
        diff = corners[:, None, :] - corners[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def corners(self):
        x0, x1, y0, y1 = self.bbox()
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    def contains(self, points, strict=True):
        """Vectorised membership test for an ``(N, 2)`` array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tol = -_TOL if strict else _TOL
        if self.kind == "ball":
            d2 = (pts[:, 0] - self.center[0]) ** 2 + (pts[:, 1] - self.center[1]) ** 2
            return d2 < (self.radius + tol) ** 2
        if self.kind == "rect":
            x0, x1, y0, y1 = self.bbox()
            return (
                (pts[:, 0] > x0 - tol) & (pts[:, 0] < x1 + tol)
                & (pts[:, 1] > y0 - tol) & (pts[:, 1] < y1 + tol)
            )
        inside = np.zeros(len(pts), dtype=bool)
        for r in self.members:
            inside |= r.contains(pts, strict=strict)
        return inside

    def line_intervals(self, axis, coord):
        """Open intervals of the line through ``coord`` that lie in the domain.

        ``axis=0`` is the horizontal line ``y = coord`` (intervals in x);
        ``axis=1`` the vertical line ``x = coord`` (intervals in y).
        """
        if self.kind == "ball":
            c_line = self.center[1 - axis]
            c_along = self.center[axis]
            off = coord - c_line
            if abs(off) >= self.radius:
                return []
            half = math.sqrt(self.radius**2 - off**2)
            return [(c_along - half, c_along + half)]
        if self.kind == "rect":
            x0, x1, y0, y1 = self.bbox()
            lo, hi = ((y0, y1), (x0, x1))[axis]
            if not lo < coord < hi:
                return []
            return [((x0, x1), (y0, y1))[axis]]
        pieces = sorted(iv for r in self.members for iv in r.line_intervals(axis, coord))
        merged = []
        for a, b in pieces:
            if merged and a <= merged[-1][1] + _TOL:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return merged

    def boundary_segments(self):
        """Axis-aligned boundary pieces as ``(x0, y0, x1, y1)`` rows (rectangles and unions only)."""
        if self.kind == "ball":
            raise DomainError("a ball boundary has no straight segments")
        if self.kind == "rect":
            x0, x1, y0, y1 = self.bbox()
            return np.array(
                [(x0, y0, x1, y0), (x1, y0, x1, y1), (x0, y1, x1, y1), (x0, y0, x0, y1)], dtype=float
            )
        return np.array(_union_boundary(self.members), dtype=float)

    def cells_inside(self, x0, x1, y0, y1):
        """Vectorised test that closed cells ``[x0,x1]x[y0,y1]`` lie in the closure of the domain."""
        x0, x1, y0, y1 = (np.asarray(a, dtype=float) for a in (x0, x1, y0, y1))
        if self.kind == "ball":
            ok = np.ones(x0.shape, dtype=bool)
            for cx in (x0, x1):
                for cy in (y0, y1):
                    d2 = (cx - self.center[0]) ** 2 + (cy - self.center[1]) ** 2
                    ok &= d2 <= self.radius**2 * (1 + 1e-12)
            return ok
        if self.kind == "rect":
            bx0, bx1, by0, by1 = self.bbox()
            return (x0 >= bx0 - _TOL) & (x1 <= bx1 + _TOL) & (y0 >= by0 - _TOL) & (y1 <= by1 + _TOL)
        ok = np.zeros(x0.shape, dtype=bool)
        for r in self.members:
            ok |= r.cells_inside(x0, x1, y0, y1)
        # Cells straddling several members: split at member edges and test the pieces.
        for idx in np.flatnonzero(~ok):
            ok[idx] = _cell_in_union(self.members, x0[idx], x1[idx], y0[idx], y1[idx])
        return ok

    def to_string(self):
        def num(v):
            return repr(float(v))

        cx, cy = self.center
        if self.kind == "ball":
            return f"ball:{num(self.radius)}:{num(cx)},{num(cy)}"
        if self.kind == "rect":
            return f"rect:{num(self.half_widths[0])},{num(self.half_widths[1])}:{num(cx)},{num(cy)}"
        parts = [
            ",".join(num(v) for v in (r.half_widths[0], r.half_widths[1], r.center[0], r.center[1]))
            for r in self.members
        ]
        return "rectunion:" + ";".join(parts)


def _union_bbox(rects):
    boxes = np.array([r.bbox() for r in rects])
    return (boxes[:, 0].min(), boxes[:, 1].max(), boxes[:, 2].min(), boxes[:, 3].max())


def _check_connected(rects):
    # Members must overlap or share a boundary piece of positive length.
    k = len(rects)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        ax0, ax1, ay0, ay1 = rects[i].bbox()
        for j in range(i + 1, k):
            bx0, bx1, by0, by1 = rects[j].bbox()
            wx = min(ax1, bx1) - max(ax0, bx0)
            wy = min(ay1, by1) - max(ay0, by0)
            if wx >= -_TOL and wy >= -_TOL and max(wx, wy) > _TOL:
                parent[find(i)] = find(j)
    if len({find(i) for i in range(k)}) > 1:
        raise DomainError("rectangle union is not connected")


def _cell_in_union(rects, x0, x1, y0, y1):
    xs = sorted({x0, x1, *[e for r in rects for e in r.bbox()[:2] if x0 < e < x1]})
    ys = sorted({y0, y1, *[e for r in rects for e in r.bbox()[2:] if y0 < e < y1]})
    for a, b in zip(xs[:-1], xs[1:]):
        for c, d in zip(ys[:-1], ys[1:]):
            mid = np.array([[(a + b) / 2, (c + d) / 2]])
            if not any(r.contains(mid, strict=False)[0] for r in rects):
                return False
    return True


def _union_boundary(rects):
    union = DomainSpec("rectunion", members=tuple(rects))
    eps = 1e-9
    segs = []
    for r in rects:
        x0, x1, y0, y1 = r.bbox()
        edges = [
            ((x0, y0), (x1, y0), (0.0, -1.0)),
            ((x1, y0), (x1, y1), (1.0, 0.0)),
            ((x0, y1), (x1, y1), (0.0, 1.0)),
            ((x0, y0), (x0, y1), (-1.0, 0.0)),
        ]
        for (ax, ay), (bx, by), (nx, ny) in edges:
            horizontal = ay == by
            lo, hi = (ax, bx) if horizontal else (ay, by)
            cuts = {lo, hi}
            for q in rects:
                qx0, qx1, qy0, qy1 = q.bbox()
                for c in ((qx0, qx1) if horizontal else (qy0, qy1)):
                    if lo < c < hi:
                        cuts.add(c)
            cuts = sorted(cuts)
            for a, b in zip(cuts[:-1], cuts[1:]):
                mid = (a + b) / 2
                px, py = (mid, ay) if horizontal else (ax, mid)
                probe = np.array([[px + eps * nx, py + eps * ny], [px - eps * nx, py - eps * ny]])
                outside, inside = union.contains(probe, strict=True)
                if inside and not outside:
                    segs.append((a, ay, b, ay) if horizontal else (ax, a, ax, b))
    # drop duplicates produced by coincident member edges
    uniq = sorted({tuple(round(v, 14) for v in s) for s in segs})
    return uniq


def parse_domain(text):
    """Parse a domain string.

    Grammar::

        ball:R[:cx,cy]
        rect:hx,hy[:cx,cy]
        rectunion:hx1,hy1,cx1,cy1;hx2,hy2,cx2,cy2;...

    Raises :class:`DomainParseError` with the offending character offset.
    """
    pos = text.find(":")
    if pos < 0:
        raise DomainParseError("expected '<kind>:'", text, len(text))
    kind = text[:pos].strip().lower()
    body = text[pos + 1 :]
    base = pos + 1

    def numbers(chunk, offset, count):
        vals = []
        cursor = 0
        for piece in chunk.split(","):
            try:
                vals.append(float(piece))
            except ValueError:
                raise DomainParseError(f"invalid number {piece!r}", text, offset + cursor) from None
            cursor += len(piece) + 1
        if count is not None and len(vals) not in count:
            raise DomainParseError(
                f"expected {' or '.join(map(str, count))} numbers, got {len(vals)}", text, offset
            )
        return vals

    try:
        if kind in ("ball", "rect"):
            head, sep, tail = body.partition(":")
            need = 1 if kind == "ball" else 2
            vals = numbers(head, base, (need,))
            center = (0.0, 0.0)
            if sep:
                center = tuple(numbers(tail, base + len(head) + 1, (2,)))
            if kind == "ball":
                return DomainSpec.ball(vals[0], center)
            return DomainSpec.rect(vals, center)
        if kind == "rectunion":
            rects = []
            offset = base
            for chunk in body.split(";"):
                hx, hy, cx, cy = numbers(chunk, offset, (4,))
                rects.append(DomainSpec.rect((hx, hy), (cx, cy)))
                offset += len(chunk) + 1
            return DomainSpec.rect_union(rects)
    except DomainParseError:
        raise
    except DomainError as exc:
        raise DomainParseError(str(exc), text, base) from None
    raise DomainParseError(f"unknown domain kind {kind!r}", text, 0)


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class Grid:
    """Cell-centred grid over a domain.

    Nodes are stored in row-major order (``iy`` slow, ``ix`` fast).  ``x_fibers[j]``
    holds the node indices of row ``j`` ordered by x; ``y_fibers`` likewise per column.
    ``x_intervals[j]`` is the list of open intervals of that row's line inside the domain.
    """

    domain: DomainSpec
    h: tuple
    origin: tuple
    nodes: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    x_fibers: tuple
    y_fibers: tuple
    x_intervals: tuple
    y_intervals: tuple
    boundary_samples: np.ndarray
    boundary_spacing: float
    key: tuple = field(default=())

    @property
    def size(self):
        return len(self.nodes)

    @property
    def cell_area(self):
        return self.h[0] * self.h[1]

    def metadata(self):
        return {
            "domain": self.domain.to_string(),
            "h": float(self.h[0]),
            "nodes": int(self.size),
        }

    def node_index(self, ix, iy):
        """Index of the node with lattice indices ``(ix, iy)``, or ``-1``."""
        hits = np.flatnonzero((self.ix == ix) & (self.iy == iy))
        return int(hits[0]) if len(hits) else -1


def sample_boundary(domain, spacing=DEFAULT_BOUNDARY_SPACING):
    """Points on the boundary with consecutive gaps at most ``spacing``."""
    if not spacing > 0:
        raise ValueError("boundary spacing must be positive")
    if domain.kind == "ball":
        count = max(8, math.ceil(2 * math.pi * domain.radius / spacing - 1e-9))
        theta = 2 * math.pi * np.arange(count) / count
        return np.column_stack(
            [domain.center[0] + domain.radius * np.cos(theta), domain.center[1] + domain.radius * np.sin(theta)]
        )
    pts = []
    for x0, y0, x1, y1 in domain.boundary_segments():
        length = math.hypot(x1 - x0, y1 - y0)
        count = max(1, math.ceil(length / spacing - 1e-9))
        t = np.arange(count + 1) / count
        pts.append(np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]))
    pts = np.concatenate(pts)
    return np.unique(np.round(pts, 14), axis=0)


def build_grid(domain, h, boundary_spacing=DEFAULT_BOUNDARY_SPACING):
    """Cell-centred grid keeping every lattice cell of side ``h`` that lies inside ``domain``."""
    if not h > 0:
        raise ValueError("grid spacing h must be positive")
    if domain.n != 1 or domain.m != 1:
        raise UnsupportedDims(f"only n = m = 1 is supported, got n={domain.n}, m={domain.m}")
    xmin, xmax, ymin, ymax = domain.bbox()
    nx = max(1, math.ceil((xmax - xmin) / h - 1e-9))
    ny = max(1, math.ceil((ymax - ymin) / h - 1e-9))
    jy, jx = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    jx, jy = jx.ravel(), jy.ravel()
    x0 = xmin + jx * h
    y0 = ymin + jy * h
    keep = domain.cells_inside(x0, x0 + h, y0, y0 + h)
    if not keep.any():
        raise EmptyGrid(f"no cell of size h={h} fits inside {domain.to_string()}")
    ix, iy = jx[keep], jy[keep]
    nodes = np.column_stack([xmin + (ix + 0.5) * h, ymin + (iy + 0.5) * h])

    x_fibers, x_intervals = [], []
    for row in np.unique(iy):
        idx = np.flatnonzero(iy == row)
        x_fibers.append(idx[np.argsort(ix[idx], kind="stable")])
        x_intervals.append(tuple(domain.line_intervals(0, ymin + (row + 0.5) * h)))
    y_fibers, y_intervals = [], []
    for col in np.unique(ix):
        idx = np.flatnonzero(ix == col)
        y_fibers.append(idx[np.argsort(iy[idx], kind="stable")])
        y_intervals.append(tuple(domain.line_intervals(1, xmin + (col + 0.5) * h)))

    samples = sample_boundary(domain, boundary_spacing)
    for arr in (nodes, ix, iy, samples, *x_fibers, *y_fibers):
        arr.setflags(write=False)
    return Grid(
        domain=domain,
        h=(float(h), float(h)),
        origin=(xmin, ymin),
        nodes=nodes,
        ix=ix,
        iy=iy,
        x_fibers=tuple(x_fibers),
        y_fibers=tuple(y_fibers),
        x_intervals=tuple(x_intervals),
        y_intervals=tuple(y_intervals),
        boundary_samples=samples,
        boundary_spacing=float(boundary_spacing),
        key=(domain.to_string(), float(h), float(boundary_spacing)),
    )


# ---------------------------------------------------------------------------
# max-min boundary distance


@dataclass(frozen=True)
class GeoResult:
    """Outcome of the max-min problem.

    ``R_s``/``argmax_point`` come from the grid maximum followed by a local
    continuous refinement; ``node_R_s``/``node_index`` are the best grid node.
    """

    R_s: float
    argmax_point: tuple
    s: float
    node_index: int = -1
    node_R_s: float = float("nan")

    @property
    def lambda_infinity(self):
        return 1.0 / self.R_s


def _sdist(dx, dy, s):
    return np.abs(dx) ** s + np.abs(dy) ** s


def _sampled_min(points, samples, s, chunk=512):
    out = np.empty(len(points))
    for start in range(0, len(points), chunk):
        p = points[start : start + chunk]
        vals = _sdist(p[:, None, 0] - samples[None, :, 0], p[:, None, 1] - samples[None, :, 1], s)
        out[start : start + chunk] = vals.min(axis=1)
    return out


def _segment_min(points, segs, s):
    # exact: on a horizontal piece the best boundary point is the clamp of x
    x = points[:, None, 0]
    y = points[:, None, 1]
    x0 = np.minimum(segs[None, :, 0], segs[None, :, 2])
    x1 = np.maximum(segs[None, :, 0], segs[None, :, 2])
    y0 = np.minimum(segs[None, :, 1], segs[None, :, 3])
    y1 = np.maximum(segs[None, :, 1], segs[None, :, 3])
    dx = x - np.clip(x, x0, x1)
    dy = y - np.clip(y, y0, y1)
    return _sdist(dx, dy, s).min(axis=1)


def _ball_min(points, domain, s, resolution=DEFAULT_BALL_SAMPLES, chunk=512):
    cx, cy = domain.center
    r = domain.radius
    m = resolution
    theta = 2 * np.pi * np.arange(m) / m
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty(len(points))
    gr = (math.sqrt(5) - 1) / 2

    def g(px, py, th):
        return _sdist(cx + r * np.cos(th) - px, cy + r * np.sin(th) - py, s)

    for start in range(0, len(points), chunk):
        p = points[start : start + chunk]
        px, py = p[:, 0:1], p[:, 1:2]
        vals = _sdist(cx + r * ct[None, :] - px, cy + r * st[None, :] - py, s)
        # axis hits: boundary points sharing one coordinate with the query point,
        # evaluated in closed form so the shared coordinate contributes exactly 0
        half_y = np.sqrt(np.maximum(r * r - (px - cx) ** 2, 0.0))
        half_x = np.sqrt(np.maximum(r * r - (py - cy) ** 2, 0.0))
        hits = np.concatenate(
            [
                np.abs(cy + half_y - py) ** s,
                np.abs(cy - half_y - py) ** s,
                np.abs(cx + half_x - px) ** s,
                np.abs(cx - half_x - px) ** s,
            ],
            axis=1,
        )
        best = hits.min(axis=1)
        # refine the three lowest discrete local minima by golden-section search
        local = (vals <= np.roll(vals, 1, axis=1)) & (vals <= np.roll(vals, -1, axis=1))
        masked = np.where(local, vals, np.inf)
        k = min(3, m)
        cand = np.argpartition(masked, k - 1, axis=1)[:, :k]
        for j in range(k):
            th0 = theta[cand[:, j]][:, None]
            lo, hi = th0 - 2 * np.pi / m, th0 + 2 * np.pi / m
            c = hi - gr * (hi - lo)
            d = lo + gr * (hi - lo)
            fc, fd = g(px, py, c), g(px, py, d)
            for _ in range(40):
                left = fc < fd
                hi_n = np.where(left, d, hi)
                lo_n = np.where(left, lo, c)
                c_n = np.where(left, hi_n - gr * (hi_n - lo_n), d)
                d_n = np.where(left, c, lo_n + gr * (hi_n - lo_n))
                fc, fd = np.where(left, g(px, py, c_n), fd), np.where(left, fc, g(px, py, d_n))
                lo, hi, c, d = lo_n, hi_n, c_n, d_n
            refined = np.minimum(np.minimum(fc, fd), vals[np.arange(len(p)), cand[:, j]][:, None])
            best = np.minimum(best, refined[:, 0])
        out[start : start + chunk] = np.minimum(best, vals.min(axis=1))
    return out


def boundary_min_many(domain, points, s, samples=None):
    """``min over boundary of |x-z|^s + |y-w|^s`` for every row of ``points``.

    With ``samples`` the minimum runs over that discrete set; otherwise an exact
    (rectangles, unions) or refined (balls) evaluation is used.
    """
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if samples is not None:
        return _sampled_min(pts, np.asarray(samples, dtype=float), s)
    if domain.kind == "ball":
        return _ball_min(pts, domain, s)
    return _segment_min(pts, domain.boundary_segments(), s)


def boundary_min_s(domain, point, s, samples=None):
    """Anisotropic s-distance from ``point`` to the boundary (see :func:`boundary_min_many`)."""
    if not domain.contains(np.asarray(point, dtype=float)[None, :], strict=False)[0]:
        raise ValueError(f"point {tuple(point)} is not in the domain")
    return float(boundary_min_many(domain, np.asarray(point, dtype=float)[None, :], s, samples)[0])


def _node_values_for_max(domain, grid, s, method):
    """Boundary distances at nodes, exact only where they can still be the maximum.

    Returns an array with ``-inf`` for nodes pruned by a sampled upper bound.
    """
    if method == "sampled":
        return boundary_min_many(domain, grid.nodes, s, grid.boundary_samples)
    if domain.kind != "ball":
        return boundary_min_many(domain, grid.nodes, s)
    # sampled minima bound the exact minima from above
    upper = _sampled_min(grid.nodes, sample_boundary(domain, DEFAULT_BOUNDARY_SPACING * domain.radius), s)
    order = np.argsort(-upper, kind="stable")
    vals = np.full(grid.size, -np.inf)
    best = -np.inf
    for start in range(0, grid.size, 256):
        block = order[start : start + 256]
        if upper[block[0]] < best:
            break
        vals[block] = _ball_min(grid.nodes[block], domain, s)
        best = max(best, vals[block].max())
    return vals


def _refine_max(domain, start, s, scale):
    def neg(z):
        if not domain.contains(z[None, :], strict=True)[0]:
            return 0.0
        return -float(boundary_min_many(domain, z[None, :], s)[0])

    simplex = np.array([start, start + [scale, 0.0], start + [0.0, scale]])
    res = optimize.minimize(
        neg, start, method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000},
    )
    return res.x, -res.fun


def compute_Rs(domain, s, grid, method="exact", refine=True):
    """Maximise the boundary s-distance over the domain.

    The maximum is first taken over grid nodes (ties: first node in row-major
    order).  ``method`` selects the boundary minimum: ``"exact"`` (analytic for
    rectangles and unions, refined for balls) or ``"sampled"`` (minimum over
    ``grid.boundary_samples``).  With ``refine`` and the exact method, a local
    Nelder-Mead search started at the best node improves the maximiser off the
    lattice.
    """
    if method not in ("exact", "sampled"):
        raise ValueError(f"unknown method {method!r}")
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    vals = _node_values_for_max(domain, grid, s, method)
    k = int(np.argmax(vals))
    node_val = float(vals[k])
    point, value = grid.nodes[k], node_val
    if refine and method == "exact":
        cand, cand_val = _refine_max(domain, np.array(grid.nodes[k], dtype=float), s, grid.h[0] / 2)
        if cand_val > value:
            point, value = cand, cand_val
    return GeoResult(
        R_s=float(value),
        argmax_point=tuple(float(c) for c in point),
        s=float(s),
        node_index=k,
        node_R_s=node_val,
    )


def lambda_infinity(domain, s, grid, method="exact", refine=True):
    """Geometric limit value ``1 / R_s``."""
    return 1.0 / compute_Rs(domain, s, grid, method, refine).R_s
