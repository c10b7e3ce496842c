"""Exact boundaries for a binary source through a binary symmetric channel.

All entropy-frame quantities here are in bits.  The Arimoto curves live in
the multiplicative K frame (l^beta norms of binary distributions) and map to
the conditional-entropy frame via ``k_frame_to_entropy``; computing in the K
frame first avoids log-of-small-number instability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    Channel,
    Distribution,
    binary_entropy,
    binary_entropy_inv,
    star,
)
from .sweep import WitnessChannel


@dataclass(frozen=True)
class BscInstance:
    """Binary source P(X=1) = q <= 1/2 observed through a symmetric channel
    with crossover probability delta <= 1/2."""

    q: float
    delta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 0.5:
            raise ValueError(f"q must lie in [0, 1/2], got {self.q}")
        if not 0.0 <= self.delta <= 0.5:
            raise ValueError(f"delta must lie in [0, 1/2], got {self.delta}")

    def marginal(self) -> Distribution:
        return Distribution([1.0 - self.q, self.q])

    def channel(self) -> Channel:
        d = self.delta
        return Channel([[1.0 - d, d], [d, 1.0 - d]])


@dataclass(frozen=True, eq=False)
class GerberPoint:
    """One upper-boundary point with its mixture parameter and witness."""

    x: float
    y: float
    alpha: float
    witness: WitnessChannel


def mrs_gerber(inst: BscInstance, x: float) -> float:
    """Lower boundary of the conditional-entropy region in bits:
    h(delta star h^{-1}(x)) for x in [0, h(q)].  Convex and non-decreasing."""
    hq = binary_entropy(inst.q)
    if x < -1e-12 or x > hq + 1e-9:
        raise ValueError(f"x = {x} outside [0, {hq}]")
    x = min(max(x, 0.0), 1.0)
    return binary_entropy(star(inst.delta, binary_entropy_inv(x)))


def _binary(p1: float) -> Distribution:
    return Distribution([1.0 - p1, p1])


def mr_gerber_point(inst: BscInstance, alpha: float) -> GerberPoint:
    """Upper-boundary point at mixture parameter alpha in [0, 1].

    With z = max(alpha, 2q):  x = alpha * h(q/z),
    y = alpha * h(delta star q/z) + (1 - alpha) * h(delta).

    The witness has two regimes.  For alpha >= 2q it mixes the point mass on
    X = 0 with the tilted conditional P(X=1|W=1) = q/alpha; for alpha < 2q it
    mixes both point masses with the uniform conditional, with weights
    (1 - q - alpha/2, q - alpha/2, alpha).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    q, delta = inst.q, inst.delta
    z = max(alpha, 2.0 * q)
    ratio = 0.5 if z == 0.0 else min(q / z, 1.0)
    x = alpha * binary_entropy(ratio)
    y = alpha * binary_entropy(star(delta, ratio)) + (1.0 - alpha) * binary_entropy(delta)
    marginal = inst.marginal()
    if alpha >= 2.0 * q:
        pairs = [(1.0 - alpha, _binary(0.0)), (alpha, _binary(ratio))]
    else:
        pairs = [
            (1.0 - q - alpha / 2.0, _binary(0.0)),
            (q - alpha / 2.0, _binary(1.0)),
            (alpha, _binary(0.5)),
        ]
    atoms = tuple((w, p) for w, p in pairs if w > 1e-15)
    witness = WitnessChannel(atoms=atoms, marginal=marginal)
    return GerberPoint(x=float(x), y=float(y), alpha=float(alpha), witness=witness)


def mr_gerber(inst: BscInstance, x: float) -> float:
    """Upper boundary in bits as a function of x, by monotone inversion of
    the alpha parametrization (x is continuous non-decreasing in alpha).
    Concave on [0, h(q)]."""
    hq = binary_entropy(inst.q)
    if x < -1e-12 or x > hq + 1e-9:
        raise ValueError(f"x = {x} outside [0, {hq}]")
    x = min(max(x, 0.0), hq)
    if x == 0.0:
        return mr_gerber_point(inst, 0.0).y
    if x >= hq:
        return mr_gerber_point(inst, 1.0).y

    def gap(alpha: float) -> float:
        return mr_gerber_point(inst, alpha).x - x

    alpha = brentq(gap, 0.0, 1.0, xtol=1e-13, rtol=9e-16)
    return mr_gerber_point(inst, float(alpha)).y


def k_norm(p: float, beta: float) -> float:
    """l^beta norm of the binary distribution (1-p, p)."""
    if not math.isfinite(beta) or beta < 2.0:
        raise ValueError("beta must be >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return (p**beta + (1.0 - p) ** beta) ** (1.0 / beta)


def arimoto_mrs_gerber(inst: BscInstance, beta: float, p: float) -> tuple[float, float]:
    """Lower-boundary point of the K-frame region at parameter p in [0, q]:
    (K(p), K(p star delta)).  x spans [K(q), 1]."""
    if p < -1e-12 or p > inst.q + 1e-12:
        raise ValueError(f"p = {p} outside [0, q = {inst.q}]")
    p = min(max(p, 0.0), inst.q if inst.q > 0 else 0.0)
    return k_norm(p, beta), k_norm(star(p, inst.delta), beta)


def arimoto_mr_gerber(inst: BscInstance, beta: float, alpha: float) -> tuple[float, float]:
    """Upper-boundary point of the K-frame region at mixture alpha in [0, 1]:
    with z = max(alpha, 2q),
    (1 - alpha + alpha * K(q/z), alpha * K(q/z star delta) + (1 - alpha) * K(delta))."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    q, delta = inst.q, inst.delta
    z = max(alpha, 2.0 * q)
    ratio = 0.5 if z == 0.0 else min(q / z, 1.0)
    x = (1.0 - alpha) + alpha * k_norm(ratio, beta)
    y = alpha * k_norm(star(ratio, delta), beta) + (1.0 - alpha) * k_norm(delta, beta)
    return float(x), float(y)


def k_frame_to_entropy(value: float, beta: float) -> float:
    """Map a K-frame value in (0, 1] to the conditional-entropy frame (nats):
    beta/(1-beta) * log(value).  Inverse of exp((1-beta)/beta * H)."""
    if not math.isfinite(beta) or beta < 2.0:
        raise ValueError("beta must be >= 2")
    if not 0.0 < value <= 1.0 + 1e-12:
        raise ValueError(f"K-frame value must lie in (0, 1], got {value}")
    return beta / (1.0 - beta) * math.log(min(value, 1.0))


CLOSED_FORM_CSV_HEADER = ["q", "delta", "beta", "x", "lower", "upper"]


def closed_form_table(
    inst: BscInstance,
    law: str,
    *,
    beta: float | None = None,
    points: int = 101,
) -> list[list[str]]:
    """Rows for the closed-form export schema; the column not covered by the
    requested law stays empty."""
    if points < 2:
        raise ValueError("points must be at least 2")
    rows: list[list[str]] = []
    q_str, d_str = repr(float(inst.q)), repr(float(inst.delta))
    if law in ("mgl", "mrgl"):
        xs = np.linspace(0.0, binary_entropy(inst.q), points)
        for x in xs:
            lower = repr(mrs_gerber(inst, float(x))) if law == "mgl" else ""
            upper = repr(mr_gerber(inst, float(x))) if law == "mrgl" else ""
            rows.append([q_str, d_str, "", repr(float(x)), lower, upper])
        return rows
    if law in ("arimoto-mgl", "arimoto-mrgl"):
        if beta is None:
            raise ValueError("arimoto laws need beta")
        b_str = repr(float(beta))
        if law == "arimoto-mgl":
            for p in np.linspace(0.0, inst.q, points):
                x, y = arimoto_mrs_gerber(inst, beta, float(p))
                rows.append([q_str, d_str, b_str, repr(x), repr(y), ""])
        else:
            for alpha in np.linspace(0.0, 1.0, points):
                x, y = arimoto_mr_gerber(inst, beta, float(alpha))
                rows.append([q_str, d_str, b_str, repr(x), "", repr(y)])
        rows.sort(key=lambda r: float(r[3]))
        return rows
    raise ValueError(f"unknown law {law!r}")
