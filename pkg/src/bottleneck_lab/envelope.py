"""Discretized simplex lattices and convex/concave envelopes of the
slope-adjusted objective g(Tp) - lambda * f(p).

The boundary machinery only ever needs the envelope value at one marginal
point together with the lattice points whose convex combination achieves it
(the support set), but full per-point envelopes are cheap and kept so that
dominance, convexity, and refinement properties can be checked directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .core import Channel, Distribution, DivergenceKernel, resolve_functional

# Gap below which the envelope is considered to touch the objective at the
# queried marginal (the trivial case of the slope-sweep algorithm).
TRIVIAL_GAP_TOL = 1e-7

_CROSS_TOL = 1e-12  # strict-turn test; collinear hull points are dropped
_TOUCH_TOL = 1e-10
_BARY_TOL = 1e-9

DEFAULT_RESOLUTION = {2: 4096, 3: 128, 4: 32}


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `parts` nonnegative integers summing to `total`, in
    lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in compositions(total - head, parts - 1):
            yield (head,) + tail


@dataclass(frozen=True, eq=False)
class SimplexLattice:
    """All compositions (k_1, ..., k_m) / N of the simplex, in a canonical
    (lexicographic) order.  For m = 2 the first coordinate increases with the
    point index, so the lattice is a sorted 1-D path."""

    m: int
    resolution: int
    points: np.ndarray

    @classmethod
    def build(cls, m: int, resolution: int) -> "SimplexLattice":
        if m < 2:
            raise ValueError("lattice needs m >= 2")
        if resolution < 1:
            raise ValueError("lattice resolution must be >= 1")
        comps = np.array(list(compositions(resolution, m)), dtype=float)
        pts = comps / float(resolution)
        pts.setflags(write=False)
        return cls(m=m, resolution=resolution, points=pts)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def index_of(self, counts: Sequence[int]) -> int:
        counts = tuple(int(c) for c in counts)
        if len(counts) != self.m or sum(counts) != self.resolution:
            raise ValueError(f"{counts} is not a composition of the lattice")
        # Lexicographic rank of the composition.
        idx = 0
        remaining = self.resolution
        for pos in range(self.m - 1):
            for smaller in range(counts[pos]):
                idx += math.comb(remaining - smaller + self.m - pos - 2, self.m - pos - 2)
            remaining -= counts[pos]
        return idx

    def snap(self, q: Distribution | np.ndarray) -> int:
        """Index of the lattice point nearest to q (largest-remainder
        rounding of the scaled coordinates)."""
        vec = q.probs if isinstance(q, Distribution) else np.asarray(q, dtype=float)
        if vec.size != self.m:
            raise ValueError("q does not live on this lattice's simplex")
        scaled = vec * self.resolution
        base = np.floor(scaled).astype(int)
        short = self.resolution - int(base.sum())
        if short:
            order = np.argsort(scaled - base)[::-1]
            base[order[:short]] += 1
        return self.index_of(base)


@dataclass(frozen=True, eq=False)
class LagrangianGraph:
    """Values of g(Tp) - lam * f(p) over a lattice, with the f and g
    coordinates kept alongside (values = y_values - lam * x_values)."""

    lattice: SimplexLattice
    lam: float
    values: np.ndarray
    x_values: np.ndarray
    y_values: np.ndarray


def _as_functional(
    fn: Callable[[np.ndarray], np.ndarray] | DivergenceKernel,
    reference: np.ndarray | None,
) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(fn, DivergenceKernel):
        return resolve_functional(fn, reference)
    return fn


def build_lagrangian_graph(
    f: Callable[[np.ndarray], np.ndarray] | DivergenceKernel,
    g: Callable[[np.ndarray], np.ndarray] | DivergenceKernel,
    T: Channel | np.ndarray,
    lam: float,
    lattice: SimplexLattice,
    *,
    f_reference: np.ndarray | None = None,
    g_reference: np.ndarray | None = None,
) -> LagrangianGraph:
    """Evaluate f, g over the lattice and assemble the graph at slope lam.

    f and g may be vectorized callables or kernels (divergence kernels need
    their reference distribution).  Evaluation must be finite at every
    lattice point; a failure aborts identifying the point.
    """
    matrix = T.matrix if isinstance(T, Channel) else np.asarray(T, dtype=float)
    if matrix.shape[1] != lattice.m:
        raise ValueError("channel input alphabet does not match the lattice")
    f_fn = _as_functional(f, f_reference)
    g_fn = _as_functional(g, g_reference)
    x_vals = np.asarray(f_fn(lattice.points), dtype=float)
    y_vals = np.asarray(g_fn(lattice.points @ matrix.T), dtype=float)
    for name, vals in (("f", x_vals), ("g", y_vals)):
        bad = ~np.isfinite(vals)
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise ValueError(
                f"{name} is not finite at lattice point {lattice.points[idx].tolist()}"
            )
    values = y_vals - lam * x_vals
    for arr in (values, x_vals, y_vals):
        arr.setflags(write=False)
    return LagrangianGraph(
        lattice=lattice, lam=float(lam), values=values, x_values=x_vals, y_values=y_vals
    )


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    """Envelope values over the lattice with, per point, the lattice indices
    whose convex combination achieves the envelope there.  Points where the
    envelope meets the objective are flagged and support themselves."""

    direction: str
    envelope_values: np.ndarray
    support_sets: tuple[tuple[int, ...], ...]
    touches: np.ndarray


def _lower_hull_indices(t: np.ndarray, v: np.ndarray) -> list[int]:
    # Andrew's monotone chain over points sorted by strictly increasing t,
    # keeping the minimal vertex set (collinear middles are dropped).
    hull: list[int] = []
    push = hull.append
    pop = hull.pop
    for i in range(t.size):
        ti = t[i]
        vi = v[i]
        while len(hull) >= 2:
            a = hull[-2]
            b = hull[-1]
            cross = (t[b] - t[a]) * (vi - v[a]) - (v[b] - v[a]) * (ti - t[a])
            if cross <= _CROSS_TOL:
                pop()
            else:
                break
        push(i)
    return hull


def _envelope_1d(graph: LagrangianGraph, direction: str) -> EnvelopeResult:
    if graph.lattice.m != 2:
        raise ValueError("the 1-D envelope path requires m = 2")
    t = graph.lattice.points[:, 0]
    sign = 1.0 if direction == "lower" else -1.0
    hull = _lower_hull_indices(t, sign * graph.values)
    th = t[hull]
    vh = graph.values[hull]
    env = np.interp(t, th, vh)
    if direction == "lower":
        env = np.minimum(env, graph.values)
    else:
        env = np.maximum(env, graph.values)
    touches = np.abs(graph.values - env) <= _TOUCH_TOL
    right = np.searchsorted(th, t, side="left")
    supports: list[tuple[int, ...]] = []
    for i in range(t.size):
        if touches[i]:
            supports.append((i,))
        else:
            j = right[i]
            supports.append((hull[j - 1], hull[j]))
    env.setflags(write=False)
    touches.setflags(write=False)
    return EnvelopeResult(
        direction=direction,
        envelope_values=env,
        support_sets=tuple(supports),
        touches=touches,
    )


def lower_envelope_1d(graph: LagrangianGraph) -> EnvelopeResult:
    """Exact lower convex hull of the m = 2 graph, interpolated back onto
    every lattice abscissa."""
    return _envelope_1d(graph, "lower")


def upper_envelope_1d(graph: LagrangianGraph) -> EnvelopeResult:
    """Upper concave mirror of lower_envelope_1d."""
    return _envelope_1d(graph, "upper")


def _flat_result(graph: LagrangianGraph, direction: str) -> EnvelopeResult:
    env = graph.values.copy()
    env.setflags(write=False)
    touches = np.ones(graph.lattice.size, dtype=bool)
    touches.setflags(write=False)
    supports = tuple((i,) for i in range(graph.lattice.size))
    return EnvelopeResult(direction, env, supports, touches)


def envelope_general(graph: LagrangianGraph, direction: str) -> EnvelopeResult:
    """Envelope via the convex hull of the lifted points (p, value).

    Works for 2 <= m <= 4; the m = 2 case agrees with the dedicated 1-D path
    and exists for differential testing.  A degenerate (affine) graph is its
    own envelope.
    """
    if direction not in ("lower", "upper"):
        raise ValueError(f"unknown direction {direction!r}")
    m = graph.lattice.m
    if not 2 <= m <= 4:
        raise ValueError("general envelopes support 2 <= m <= 4")
    coords = graph.lattice.points[:, : m - 1]
    lifted = np.column_stack([coords, graph.values])
    try:
        hull = ConvexHull(lifted, qhull_options="Qt")
    except QhullError:
        return _flat_result(graph, direction)

    sign = 1.0 if direction == "lower" else -1.0
    normals = hull.equations[:, :-1]
    offsets = hull.equations[:, -1]
    last = normals[:, -1]
    keep = sign * last < -1e-12
    if not np.any(keep):
        return _flat_result(graph, direction)
    normals = normals[keep]
    offsets = offsets[keep]
    simplices = hull.simplices[keep]

    # A convex piecewise-linear envelope is the max of its facet planes
    # (min for the concave case), so the best facet at each lattice point is
    # both the envelope value and the support simplex.
    npts = coords.shape[0]
    best = np.full(npts, -np.inf if direction == "lower" else np.inf)
    best_facet = np.zeros(npts, dtype=int)
    chunk = max(1, 2_000_000 // max(npts, 1))
    for start in range(0, normals.shape[0], chunk):
        ns = normals[start : start + chunk]
        ds = offsets[start : start + chunk]
        plane_vals = -(coords @ ns[:, :-1].T + ds[None, :]) / ns[:, -1][None, :]
        if direction == "lower":
            cand = plane_vals.argmax(axis=1)
            vals = plane_vals[np.arange(npts), cand]
            better = vals > best
        else:
            cand = plane_vals.argmin(axis=1)
            vals = plane_vals[np.arange(npts), cand]
            better = vals < best
        best[better] = vals[better]
        best_facet[better] = cand[better] + start

    if direction == "lower":
        env = np.minimum(best, graph.values)
    else:
        env = np.maximum(best, graph.values)
    touches = np.abs(graph.values - env) <= _TOUCH_TOL
    supports: list[tuple[int, ...]] = []
    for i in range(npts):
        if touches[i]:
            supports.append((i,))
        else:
            supports.append(tuple(int(v) for v in simplices[best_facet[i]]))
    env.setflags(write=False)
    touches.setflags(write=False)
    return EnvelopeResult(direction, env, tuple(supports), touches)


def barycentric_weights(points: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Nonnegative weights expressing target as a convex combination of the
    rows of points; residual beyond 1e-9 raises."""
    k = points.shape[0]
    if k == 1:
        weights = np.array([1.0])
    else:
        A = np.vstack([points.T, np.ones(k)])
        b = np.append(target, 1.0)
        weights, *_ = np.linalg.lstsq(A, b, rcond=None)
        weights = np.clip(weights, 0.0, None)
        total = weights.sum()
        if total <= 0.0:
            raise ValueError("degenerate support set")
        weights = weights / total
    resid = float(np.abs(weights @ points - target).max())
    if resid > _BARY_TOL:
        raise ValueError(f"support set does not span the query point (residual {resid:.3e})")
    return weights


def envelope_gap_at(
    result: EnvelopeResult,
    graph: LagrangianGraph,
    q: Distribution | np.ndarray,
    *,
    gap_tol: float = TRIVIAL_GAP_TOL,
) -> tuple[float, list[tuple[float, Distribution]]]:
    """Gap between the objective and its envelope at q (snapped to the
    lattice) plus the weighted support achieving the envelope there.

    A gap within gap_tol is the trivial case: the support collapses to q
    itself with weight one.
    """
    lattice = graph.lattice
    idx = lattice.snap(q)
    gap = float(abs(graph.values[idx] - result.envelope_values[idx]))
    if gap <= gap_tol or result.touches[idx]:
        return gap, [(1.0, Distribution(lattice.points[idx]))]
    support = result.support_sets[idx]
    pts = lattice.points[list(support)]
    weights = barycentric_weights(pts, lattice.points[idx])
    out = [
        (float(w), Distribution(pts[i]))
        for i, w in enumerate(weights)
        if w > 1e-12
    ]
    return gap, out


def dump_envelope_csv(graph: LagrangianGraph, result: EnvelopeResult, path: str) -> None:
    """Debug dump: one row per lattice point with coordinates, f, g, the
    slope-adjusted objective, the envelope, and the touch flag."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        m = graph.lattice.m
        writer.writerow(
            [f"p_{i + 1}" for i in range(m)] + ["f", "g", "phi", "envelope", "touches"]
        )
        for i in range(graph.lattice.size):
            writer.writerow(
                [repr(float(c)) for c in graph.lattice.points[i]]
                + [
                    repr(float(graph.x_values[i])),
                    repr(float(graph.y_values[i])),
                    repr(float(graph.values[i])),
                    repr(float(result.envelope_values[i])),
                    str(bool(result.touches[i])),
                ]
            )
