"""Boundary curves of the achievable (E[f(p_w)], E[g(T p_w)]) region.

For a fixed channel T and marginal q, the achievable pairs over all finite
mixtures sum_w alpha_w p_w = q form a convex set whose lower and upper
boundaries are traced by sweeping a slope parameter: at slope lam, the lower
(upper) envelope of g(Tp) - lam * f(p) at q either touches the objective,
yielding the single-atom point (f(q), g(Tq)), or is achieved by a convex
combination of lattice points, yielding a boundary point together with an
explicit witness channel.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import nnls

from .core import (
    Channel,
    Distribution,
    DivergenceKernel,
    entropy,
    resolve_functional,
)
from .envelope import (
    DEFAULT_RESOLUTION,
    TRIVIAL_GAP_TOL,
    LagrangianGraph,
    SimplexLattice,
    barycentric_weights,
    build_lagrangian_graph,
    envelope_general,
    lower_envelope_1d,
    upper_envelope_1d,
)

_DEDUP_X_TOL = 1e-12
_WITNESS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WitnessChannel:
    """Finite mixture {(alpha_i, p_i)} with sum alpha_i p_i = marginal,
    realizing one boundary point as an explicit conditional P(X|W)."""

    atoms: tuple[tuple[float, Distribution], ...]
    marginal: Distribution

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("witness needs at least one atom")
        m = self.marginal.m
        if len(self.atoms) > m + 1:
            raise ValueError(f"witness has {len(self.atoms)} atoms; at most {m + 1} allowed")
        weights = np.array([a for a, _ in self.atoms], dtype=float)
        if np.any(weights <= 0.0):
            raise ValueError("witness weights must be strictly positive")
        if abs(float(weights.sum()) - 1.0) > _WITNESS_TOL:
            raise ValueError(f"witness weights sum to {weights.sum()}")
        mix = weights @ self.conditionals()
        err = float(np.abs(mix - self.marginal.probs).max())
        if err > _WITNESS_TOL:
            raise ValueError(f"witness mixture misses its marginal by {err:.3e}")

    def weights(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms], dtype=float)

    def conditionals(self) -> np.ndarray:
        return np.vstack([p.probs for _, p in self.atoms])

    def expectation(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        vals = np.asarray(fn(self.conditionals()), dtype=float)
        return float(self.weights() @ vals)

    def to_json(self) -> str:
        return json.dumps(
            {"atoms": [{"alpha": float(a), "p": p.probs.tolist()} for a, p in self.atoms]},
            separators=(",", ":"),
        )


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """One boundary point (x, y) at supporting slope lam, with its witness.
    Forced endpoints carry lam = nan.  marginal_free records whether the
    generating functionals are independent of the input marginal."""

    lam: float
    x: float
    y: float
    witness: WitnessChannel
    trivial: bool
    marginal_free: bool = False


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """x-sorted boundary points for one side of the achievable region."""

    direction: str
    points: tuple[BoundaryPoint, ...]
    problem: str
    frame: str
    marginal: Distribution
    channel: Channel
    f_kernel: DivergenceKernel | None = None
    g_kernel: DivergenceKernel | None = None
    beta: float | None = None

    @property
    def xs(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def ys(self) -> np.ndarray:
        return np.array([p.y for p in self.points])

    def interpolate(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.ys))


def _as_channel(T: Channel | np.ndarray) -> Channel:
    return T if isinstance(T, Channel) else Channel(T)


def _resolve_pair(
    f_kernel: DivergenceKernel,
    g_kernel: DivergenceKernel,
    q: np.ndarray,
    T: Channel,
) -> tuple[Callable, Callable]:
    f_ref = q if f_kernel.is_divergence else None
    g_ref = T.matrix @ q if g_kernel.is_divergence else None
    return resolve_functional(f_kernel, f_ref), resolve_functional(g_kernel, g_ref)


def _envelope_for(graph: LagrangianGraph, direction: str):
    if direction not in ("lower", "upper"):
        raise ValueError(f"unknown direction {direction!r}")
    if graph.lattice.m == 2:
        return lower_envelope_1d(graph) if direction == "lower" else upper_envelope_1d(graph)
    return envelope_general(graph, direction)


def _point_from_graph(
    graph: LagrangianGraph,
    q_idx: int,
    direction: str,
    marginal_free: bool,
) -> BoundaryPoint:
    lattice = graph.lattice
    result = _envelope_for(graph, direction)
    q_point = lattice.points[q_idx]
    gap = float(abs(graph.values[q_idx] - result.envelope_values[q_idx]))
    if gap <= TRIVIAL_GAP_TOL or result.touches[q_idx]:
        witness = WitnessChannel(
            atoms=((1.0, Distribution(q_point)),), marginal=Distribution(q_point)
        )
        return BoundaryPoint(
            lam=graph.lam,
            x=float(graph.x_values[q_idx]),
            y=float(graph.y_values[q_idx]),
            witness=witness,
            trivial=True,
            marginal_free=marginal_free,
        )
    support = result.support_sets[q_idx]
    pts = lattice.points[list(support)]
    weights = barycentric_weights(pts, q_point)
    keep = weights > 1e-12
    idxs = [s for s, k in zip(support, keep) if k]
    w = weights[keep]
    w = w / w.sum()
    x = float(w @ graph.x_values[idxs])
    y = float(w @ graph.y_values[idxs])
    witness = WitnessChannel(
        atoms=tuple((float(a), Distribution(lattice.points[i])) for a, i in zip(w, idxs)),
        marginal=Distribution(q_point),
    )
    return BoundaryPoint(
        lam=graph.lam, x=x, y=y, witness=witness, trivial=False, marginal_free=marginal_free
    )


def boundary_point_at_lambda(
    f_kernel: DivergenceKernel,
    g_kernel: DivergenceKernel,
    T: Channel | np.ndarray,
    q: Distribution | np.ndarray,
    lam: float,
    direction: str,
    *,
    lattice: SimplexLattice | None = None,
    resolution: int | None = None,
) -> BoundaryPoint:
    """Boundary point at supporting slope lam: the trivial point (f(q), g(Tq))
    when the envelope touches the objective at q, otherwise the point spanned
    by the envelope's support atoms, with q snapped to the lattice."""
    channel = _as_channel(T)
    lattice = lattice or _default_lattice(channel.m, resolution)
    q_idx = lattice.snap(q)
    q_tilde = lattice.points[q_idx]
    f_fn, g_fn = _resolve_pair(f_kernel, g_kernel, q_tilde, channel)
    graph = build_lagrangian_graph(f_fn, g_fn, channel, lam, lattice)
    free = f_kernel.marginal_free and g_kernel.marginal_free
    return _point_from_graph(graph, q_idx, direction, free)


def _default_lattice(m: int, resolution: int | None) -> SimplexLattice:
    if resolution is None:
        if m not in DEFAULT_RESOLUTION:
            raise ValueError(f"no envelope lattice for m = {m}; use the oracle instead")
        resolution = DEFAULT_RESOLUTION[m]
    return SimplexLattice.build(m, resolution)


def default_lambda_grid(
    x_values: np.ndarray,
    y_values: np.ndarray,
    *,
    steps: int = 256,
    landmarks: Sequence[float] = (),
) -> np.ndarray:
    """Slope schedule: zero, a uniform ramp, a geometric tail for the small-
    slope regime, and any problem-specific landmark slopes.

    The top of the ramp is twice the largest chord slope from either x-extreme
    of the graph cloud, which upper-bounds the supporting slopes that can
    produce new tangencies.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    x = np.asarray(x_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    top = 0.0
    for anchor in (int(np.argmin(x)), int(np.argmax(x))):
        dx = x - x[anchor]
        dy = y - y[anchor]
        mask = np.abs(dx) > 1e-12
        if np.any(mask):
            top = max(top, float(np.max(np.abs(dy[mask] / dx[mask]))))
    for lm in landmarks:
        top = max(top, float(lm))
    lam_max = 2.0 * top if top > 0.0 else 1.0
    n_geo = steps // 3
    n_uni = steps - n_geo
    uniform = np.linspace(0.0, lam_max, n_uni + 1)[1:]
    geometric = lam_max * np.logspace(-8.0, 0.0, max(n_geo, 1))
    grid = np.unique(
        np.concatenate([[0.0], uniform, geometric, np.asarray(landmarks, dtype=float)])
    )
    return grid


def _symmetric_binary_landmarks(channel: Channel) -> tuple[float, ...]:
    # For a binary symmetric channel the objective switches between globally
    # convex/concave and mixed regimes at slope (1 - 2 delta)^2.
    mat = channel.matrix
    if mat.shape != (2, 2):
        return ()
    if abs(mat[0, 1] - mat[1, 0]) > 1e-12:
        return ()
    delta = float(mat[1, 0])
    return ((1.0 - 2.0 * delta) ** 2,)


def _vertex_indices(lattice: SimplexLattice) -> list[int]:
    out = []
    for j in range(lattice.m):
        counts = [0] * lattice.m
        counts[j] = lattice.resolution
        out.append(lattice.index_of(counts))
    return out


def sweep(
    f_kernel: DivergenceKernel,
    g_kernel: DivergenceKernel,
    T: Channel | np.ndarray,
    q: Distribution | np.ndarray,
    direction: str,
    lambda_grid: Sequence[float] | np.ndarray | None = None,
    *,
    steps: int = 256,
    resolution: int | None = None,
    lattice: SimplexLattice | None = None,
    problem: str = "generic",
    frame: str = "finfo",
    beta: float | None = None,
    workers: int | None = None,
) -> BoundaryCurve:
    """Sweep supporting slopes and assemble one boundary curve.

    The curve always contains two forced endpoints: the single-atom witness
    at q and the deterministic refinement whose atoms are the alphabet
    vertices weighted by q.  Duplicate x values keep the extremal y for the
    requested direction.
    """
    channel = _as_channel(T)
    lattice = lattice or _default_lattice(channel.m, resolution)
    q_idx = lattice.snap(q)
    q_tilde = lattice.points[q_idx]
    q_dist = Distribution(q_tilde)
    f_fn, g_fn = _resolve_pair(f_kernel, g_kernel, q_tilde, channel)
    base = build_lagrangian_graph(f_fn, g_fn, channel, 0.0, lattice)
    X, Y = base.x_values, base.y_values
    free = f_kernel.marginal_free and g_kernel.marginal_free

    if lambda_grid is None:
        lambda_grid = default_lambda_grid(
            X, Y, steps=steps, landmarks=_symmetric_binary_landmarks(channel)
        )
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("lambda grid must be sorted")

    def job(lam: float) -> BoundaryPoint:
        graph = LagrangianGraph(
            lattice=lattice, lam=float(lam), values=Y - lam * X, x_values=X, y_values=Y
        )
        return _point_from_graph(graph, q_idx, direction, free)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(job, grid))
    else:
        points = [job(lam) for lam in grid]

    points.append(_trivial_point(X, Y, q_idx, q_dist, free))
    vertex = _vertex_point(X, Y, lattice, q_dist, free)
    if vertex is not None:
        points.append(vertex)

    points.sort(key=lambda p: (p.x, p.y))
    merged: list[BoundaryPoint] = []
    for p in points:
        if merged and abs(p.x - merged[-1].x) <= _DEDUP_X_TOL:
            keep_new = p.y < merged[-1].y if direction == "lower" else p.y > merged[-1].y
            if keep_new:
                merged[-1] = p
        else:
            merged.append(p)

    return BoundaryCurve(
        direction=direction,
        points=tuple(merged),
        problem=problem,
        frame=frame,
        marginal=q_dist,
        channel=channel,
        f_kernel=f_kernel,
        g_kernel=g_kernel,
        beta=beta,
    )


def _trivial_point(X, Y, q_idx, q_dist, free) -> BoundaryPoint:
    witness = WitnessChannel(atoms=((1.0, q_dist),), marginal=q_dist)
    return BoundaryPoint(
        lam=float("nan"),
        x=float(X[q_idx]),
        y=float(Y[q_idx]),
        witness=witness,
        trivial=True,
        marginal_free=free,
    )


def _vertex_point(X, Y, lattice, q_dist, free) -> BoundaryPoint | None:
    idxs = _vertex_indices(lattice)
    weights = q_dist.probs
    if not np.all(np.isfinite(X[idxs])) or not np.all(np.isfinite(Y[idxs])):
        return None
    atoms = tuple(
        (float(w), Distribution(lattice.points[i]))
        for w, i in zip(weights, idxs)
        if w > 1e-12
    )
    witness = WitnessChannel(atoms=atoms, marginal=q_dist)
    x = float(sum(w * X[i] for w, i in zip(weights, idxs) if w > 1e-12))
    y = float(sum(w * Y[i] for w, i in zip(weights, idxs) if w > 1e-12))
    return BoundaryPoint(
        lam=float("nan"), x=x, y=y, witness=witness, trivial=False, marginal_free=free
    )


def _interp_on(curve: BoundaryCurve, x: float, expected_direction: str) -> float:
    if curve.direction != expected_direction:
        raise ValueError(
            f"value query needs the {expected_direction} curve, got {curve.direction}"
        )
    if not curve.points:
        raise ValueError("curve is empty")
    xs = curve.xs
    lo, hi = float(xs[0]), float(xs[-1])
    if x < lo - 1e-12 or x > hi + 1e-12:
        warnings.warn(
            f"x = {x} outside curve domain [{lo}, {hi}]; clamping", RuntimeWarning
        )
    return curve.interpolate(min(max(x, lo), hi))


def bottleneck_value(curve: BoundaryCurve, x: float) -> float:
    """Largest achievable y subject to the x-budget, read off the upper
    curve by piecewise-linear interpolation (out-of-domain x is clamped)."""
    return _interp_on(curve, x, "upper")


def funnel_value(curve: BoundaryCurve, x: float) -> float:
    """Smallest achievable y subject to the x-floor, read off the lower
    curve (out-of-domain x is clamped)."""
    return _interp_on(curve, x, "lower")


def transform_entropy_frame(
    curve: BoundaryCurve,
    q: Distribution | np.ndarray | None = None,
    T: Channel | np.ndarray | None = None,
) -> BoundaryCurve:
    """Map a conditional-entropy-frame curve (x, y) -> (H(X) - x, H(Y) - y),
    converting it to mutual-information coordinates (and back: the map is an
    involution).  Bottleneck solutions come from lower entropy curves,
    funnel solutions from upper ones."""
    if curve.frame not in ("entropy", "entropy-mi"):
        raise ValueError("transform applies to entropy-frame curves only")
    if curve.f_kernel is None or curve.f_kernel.kind != "entropy" or (
        curve.g_kernel is None or curve.g_kernel.kind != "entropy"
    ):
        raise ValueError("transform applies to curves swept with entropy kernels")
    q_dist = curve.marginal if q is None else (
        q if isinstance(q, Distribution) else Distribution(q)
    )
    channel = curve.channel if T is None else _as_channel(T)
    hx = entropy(q_dist)
    hy = entropy(channel.push_forward(q_dist))
    new_points = tuple(
        sorted(
            (replace(p, x=hx - p.x, y=hy - p.y) for p in curve.points),
            key=lambda p: (p.x, p.y),
        )
    )
    new_frame = "entropy-mi" if curve.frame == "entropy" else "entropy"
    return replace(curve, points=new_points, frame=new_frame)


def matched_channel_extract(point: BoundaryPoint) -> WitnessChannel | None:
    """The witness as a matched channel when it has at least two atoms,
    None otherwise.  Only meaningful when the generating functionals do not
    depend on the input marginal."""
    if not point.marginal_free:
        raise ValueError(
            "matched channels require functionals independent of the input "
            "marginal (entropy or norm kernels); divergence-framed sweeps "
            "have none"
        )
    if len(point.witness.atoms) >= 2:
        return point.witness
    return None


def matched_channel_invariance_check(
    point: BoundaryPoint,
    q_prime: Distribution | np.ndarray,
    f_kernel: DivergenceKernel,
    g_kernel: DivergenceKernel,
    T: Channel | np.ndarray,
    *,
    lattice: SimplexLattice | None = None,
    resolution: int | None = None,
    verify: bool = True,
    tol: float = 1e-6,
) -> BoundaryPoint:
    """Move a matched channel to a new marginal: keep the atoms, re-solve the
    weights for q_prime, and return the boundary point they span.

    Raises when q_prime lies outside the convex hull of the atoms or when the
    witness has a single atom.  With verify=True the supporting line at the
    original slope is re-checked against a fresh envelope at q_prime.
    """
    if not (f_kernel.marginal_free and g_kernel.marginal_free):
        raise ValueError("matched-channel transport needs marginal-free functionals")
    atoms = point.witness.atoms
    if len(atoms) < 2:
        raise ValueError("a matched channel needs at least two atoms")
    channel = _as_channel(T)
    qv = q_prime.probs if isinstance(q_prime, Distribution) else np.asarray(q_prime, dtype=float)
    P = np.vstack([p.probs for _, p in atoms])
    A = np.vstack([P.T, np.ones(P.shape[0])])
    b = np.append(qv, 1.0)
    weights, residual = nnls(A, b)
    if residual > 1e-9:
        raise ValueError(
            f"q_prime is outside the convex hull of the matched channel "
            f"(residual {residual:.3e})"
        )
    f_fn = resolve_functional(f_kernel, None)
    g_fn = resolve_functional(g_kernel, None)
    fv = np.asarray(f_fn(P), dtype=float)
    gv = np.asarray(g_fn(P @ channel.matrix.T), dtype=float)
    x = float(weights @ fv)
    y = float(weights @ gv)
    keep = weights > 1e-12
    witness = WitnessChannel(
        atoms=tuple(
            (float(w), p) for w, (_, p), k in zip(weights, atoms, keep) if k
        ),
        marginal=Distribution(qv),
    )
    new_point = BoundaryPoint(
        lam=point.lam, x=x, y=y, witness=witness, trivial=False, marginal_free=True
    )
    if verify and math.isfinite(point.lam):
        lattice = lattice or _default_lattice(channel.m, resolution)
        f2, g2 = _resolve_pair(f_kernel, g_kernel, qv, channel)
        graph = build_lagrangian_graph(f2, g2, channel, point.lam, lattice)
        # The transported point must support one of the two envelopes at
        # q_prime with the original slope.
        q_idx = lattice.snap(qv)
        line = y - point.lam * x
        lo = _envelope_for(graph, "lower").envelope_values[q_idx]
        hi = _envelope_for(graph, "upper").envelope_values[q_idx]
        if min(abs(line - lo), abs(line - hi)) > tol:
            raise ValueError(
                f"transported point misses the boundary at q_prime "
                f"(deviation {min(abs(line - lo), abs(line - hi)):.3e})"
            )
    return new_point


_PROBLEM_KERNELS = {
    "ib": "kl",
    "pf": "kl",
    "eb": "chi2",
    "epf": "chi2",
    "arimoto": "norm",
    "generic": "kl",
}

_PROBLEM_FRAMES = {
    "ib": ("finfo", "entropy"),
    "pf": ("finfo", "entropy"),
    "eb": ("finfo",),
    "epf": ("finfo",),
    "arimoto": ("K",),
    "generic": ("finfo", "entropy", "K"),
}


def problem_curve(
    q: Distribution | np.ndarray,
    T: Channel | np.ndarray,
    problem: str,
    direction: str,
    *,
    beta: float | None = None,
    frame: str | None = None,
    lambda_steps: int = 256,
    resolution: int | None = None,
    lattice: SimplexLattice | None = None,
    workers: int | None = None,
) -> BoundaryCurve:
    """Boundary curve for one named problem instantiation.

    ib/pf use mutual-information kernels (or the conditional-entropy frame),
    eb/epf use chi-squared kernels, arimoto uses l^beta norm kernels in the
    multiplicative K frame.
    """
    if problem not in _PROBLEM_KERNELS:
        raise ValueError(f"unknown problem {problem!r}")
    frames = _PROBLEM_FRAMES[problem]
    frame = frame or frames[0]
    if frame not in frames:
        raise ValueError(f"frame {frame!r} is not available for problem {problem!r}")
    kind = _PROBLEM_KERNELS[problem]
    if frame == "entropy":
        kernel = DivergenceKernel.entropy_functional()
    elif frame == "K" or kind == "norm":
        kernel = DivergenceKernel.norm_beta(beta if beta is not None else 2.0)
    else:
        kernel = DivergenceKernel(kind)
    return sweep(
        kernel,
        kernel,
        T,
        q,
        direction,
        steps=lambda_steps,
        resolution=resolution,
        lattice=lattice,
        problem=problem,
        frame=frame,
        beta=kernel.beta,
        workers=workers,
    )


CURVE_CSV_HEADER = ["problem", "direction", "lambda", "x", "y", "trivial", "witness_json"]


def curve_csv_rows(curve: BoundaryCurve) -> list[list[str]]:
    """Rows for the curve export schema (forced endpoints have no slope)."""
    rows = []
    for p in curve.points:
        rows.append(
            [
                curve.problem,
                curve.direction,
                "" if math.isnan(p.lam) else repr(float(p.lam)),
                repr(float(p.x)),
                repr(float(p.y)),
                str(bool(p.trivial)),
                p.witness.to_json(),
            ]
        )
    return rows
