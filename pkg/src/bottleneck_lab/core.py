"""Probability-simplex primitives and information functionals.

Conventions used throughout the package:

- Entropies and divergences are computed in nats, except ``binary_entropy``
  and ``binary_entropy_inv`` which use bits (so that the binary entropy of
  one half equals one).  Conversions are explicit at call sites.
- ``0 * log 0 = 0`` and, for divergences, ``0 * f(0/0) = 0``.  A point with
  mass where the reference has none is a hard error, never ``inf``.
- Vectors that are within 1e-9 of summing to one are renormalized on
  construction; anything further off is rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

LN2 = math.log(2.0)

# Inputs within _SUM_TOL of stochastic are renormalized; worse are rejected.
_SUM_TOL = 1e-9
_NEG_TOL = 1e-12
_MIX_TOL = 1e-9


def _as_prob_vector(values, name: str = "probs") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < -_NEG_TOL):
        idx = int(np.argmin(arr))
        raise ValueError(f"{name}[{idx}] = {arr[idx]} is negative")
    arr = np.clip(arr, 0.0, None)
    total = float(arr.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise ValueError(f"{name} sums to {total}, not 1 (tolerance {_SUM_TOL})")
    arr = arr / total
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on an m-point alphabet (a point of the simplex)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_prob_vector(self.probs)
        if arr.size < 2:
            raise ValueError("alphabet size must be at least 2")
        object.__setattr__(self, "probs", arr)

    @property
    def m(self) -> int:
        return int(self.probs.size)

    def __repr__(self) -> str:
        return f"Distribution({self.probs.tolist()})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Column-stochastic n x m matrix; column j is the conditional P(Y|X=j)."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2:
            raise ValueError(f"channel matrix must be 2-D, got shape {mat.shape}")
        n, m = mat.shape
        if n < 2:
            raise ValueError("output alphabet size must be at least 2")
        cols = np.empty_like(mat)
        for j in range(m):
            cols[:, j] = _as_prob_vector(mat[:, j], name=f"column {j}")
        cols.setflags(write=False)
        object.__setattr__(self, "matrix", cols)

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def m(self) -> int:
        return int(self.matrix.shape[1])

    def push_forward(self, p: np.ndarray | Distribution) -> np.ndarray:
        """Output distribution T p for an input distribution p."""
        vec = p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)
        return self.matrix @ vec


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf P(X=x, Y=y) as an m x n array with rows indexed by x."""

    p_xy: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.p_xy, dtype=float)
        if mat.ndim != 2:
            raise ValueError(f"p_xy must be 2-D, got shape {mat.shape}")
        if mat.shape[0] < 2 or mat.shape[1] < 2:
            raise ValueError("both alphabets must have at least 2 symbols")
        if not np.all(np.isfinite(mat)):
            raise ValueError("p_xy contains non-finite entries")
        if np.any(mat < -_NEG_TOL):
            raise ValueError("p_xy contains negative entries")
        mat = np.clip(mat, 0.0, None)
        total = float(mat.sum())
        if total <= 0.0:
            raise ValueError("p_xy is identically zero")
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"p_xy sums to {total}, not 1 (tolerance {_SUM_TOL})")
        mat = mat / total
        mat.setflags(write=False)
        object.__setattr__(self, "p_xy", mat)

    @property
    def m(self) -> int:
        return int(self.p_xy.shape[0])

    @property
    def n(self) -> int:
        return int(self.p_xy.shape[1])

    def marginal_x(self) -> np.ndarray:
        return self.p_xy.sum(axis=1)

    def marginal_y(self) -> np.ndarray:
        return self.p_xy.sum(axis=0)


_DIVERGENCE_KINDS = ("kl", "chi2", "tv")
_FUNCTIONAL_KINDS = ("entropy", "norm")


@dataclass(frozen=True)
class DivergenceKernel:
    """The convex function defining an f-divergence, or a direct simplex
    functional (entropy, l^beta norm) used in its place.

    Kinds
    -----
    kl      f(t) = t log t              (mutual information)
    chi2    f(t) = t^2 - 1              (chi-squared information)
    tv      f(t) = |t - 1| / 2          (total variation)
    entropy direct functional p -> H(p) in nats
    norm    direct functional p -> ||p||_beta, beta >= 2
    """

    kind: str
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _DIVERGENCE_KINDS + _FUNCTIONAL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "norm":
            if self.beta is None or not math.isfinite(self.beta) or self.beta < 2.0:
                raise ValueError("norm kernel requires beta >= 2")
        elif self.beta is not None:
            raise ValueError(f"kernel kind {self.kind!r} takes no beta")

    @classmethod
    def kl(cls) -> "DivergenceKernel":
        return cls("kl")

    @classmethod
    def chi_squared(cls) -> "DivergenceKernel":
        return cls("chi2")

    @classmethod
    def total_variation(cls) -> "DivergenceKernel":
        return cls("tv")

    @classmethod
    def entropy_functional(cls) -> "DivergenceKernel":
        return cls("entropy")

    @classmethod
    def norm_beta(cls, beta: float) -> "DivergenceKernel":
        return cls("norm", beta=float(beta))

    @property
    def is_divergence(self) -> bool:
        return self.kind in _DIVERGENCE_KINDS

    @property
    def marginal_free(self) -> bool:
        """True when the resolved functional does not depend on the input
        marginal (a prerequisite for matched channels to exist)."""
        return self.kind in _FUNCTIONAL_KINDS


def entropy(p: Distribution | Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0.  Result lies in [0, log m]."""
    vec = p.probs if isinstance(p, Distribution) else _as_prob_vector(p)
    pos = vec[vec > 0.0]
    return float(-(pos * np.log(pos)).sum())


def _check_unit_interval(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v < -_NEG_TOL or v > 1.0 + _NEG_TOL:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return min(max(v, 0.0), 1.0)


def binary_entropy(q: float) -> float:
    """Binary entropy in bits; binary_entropy(0.5) = 1."""
    q = _check_unit_interval(q, "q")
    if q == 0.0 or q == 1.0:
        return 0.0
    return float(-(q * math.log2(q) + (1.0 - q) * math.log2(1.0 - q)))


def binary_entropy_inv(y: float) -> float:
    """Inverse of binary_entropy on [0, 1/2]: the unique r with h(r) = y.

    Input in bits.  The residual |h(result) - y| is at most 1e-12.
    """
    y = _check_unit_interval(y, "y")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    r = brentq(lambda t: binary_entropy(t) - y, 0.0, 0.5, xtol=1e-16, rtol=9e-16)
    return float(r)


def star(a: float, b: float) -> float:
    """Binary convolution (1-a)b + (1-b)a; symmetric, star(a, 1/2) = 1/2."""
    a = _check_unit_interval(a, "a")
    b = _check_unit_interval(b, "b")
    return (1.0 - a) * b + (1.0 - b) * a


def _divergence_terms(kind: str, p: np.ndarray, r: np.ndarray) -> np.ndarray:
    # Caller guarantees: no index with p > 0 and r == 0.
    if kind == "kl":
        out = np.zeros_like(p)
        mask = p > 0.0
        out[mask] = p[mask] * np.log(p[mask] / r[mask])
        return out
    if kind == "chi2":
        out = np.zeros_like(p)
        mask = r > 0.0
        d = p[mask] - r[mask]
        out[mask] = d * d / r[mask]
        return out
    if kind == "tv":
        return 0.5 * np.abs(p - r)
    raise ValueError(f"kernel kind {kind!r} does not define an f-divergence")


def f_divergence(
    kernel: DivergenceKernel,
    p: Distribution | np.ndarray,
    r: Distribution | np.ndarray,
) -> float:
    """f-divergence of p from r for a divergence-kind kernel.

    Requires p absolutely continuous with respect to r; an index with
    p > 0 but r = 0 raises, identifying the offending index.
    """
    pv = p.probs if isinstance(p, Distribution) else _as_prob_vector(p, "p")
    rv = r.probs if isinstance(r, Distribution) else _as_prob_vector(r, "r")
    if pv.size != rv.size:
        raise ValueError("p and r must share an alphabet")
    bad = (pv > 0.0) & (rv == 0.0)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise ValueError(
            f"absolute continuity violated: p[{idx}] = {pv[idx]} but r[{idx}] = 0"
        )
    return float(_divergence_terms(kernel.kind, pv, rv).sum())


def f_information(kernel: DivergenceKernel, joint: JointDistribution) -> float:
    """f-information between X and Y: the divergence of the joint pmf from the
    product of its marginals.  Zero when X and Y are independent."""
    px = joint.marginal_x()
    py = joint.marginal_y()
    prod = np.outer(px, py)
    # Cells where the product vanishes carry no joint mass, so the
    # 0 * f(0/0) = 0 convention applies and no continuity check can trip.
    return float(_divergence_terms(kernel.kind, joint.p_xy.ravel(), prod.ravel()).sum())


def _validate_mixture(
    weights: np.ndarray,
    conditionals: np.ndarray,
    marginal: np.ndarray | None,
) -> None:
    if np.any(weights < -_NEG_TOL):
        raise ValueError("mixture weights must be nonnegative")
    if abs(float(weights.sum()) - 1.0) > _MIX_TOL:
        raise ValueError(f"mixture weights sum to {weights.sum()}, not 1")
    if marginal is not None:
        mix = weights @ conditionals
        err = float(np.abs(mix - marginal).max())
        if err > _MIX_TOL:
            raise ValueError(
                f"mixture of conditionals misses the marginal by {err:.3e}"
            )


def _stack_conditionals(conditionals: Sequence) -> np.ndarray:
    rows = [
        c.probs if isinstance(c, Distribution) else _as_prob_vector(c, "conditional")
        for c in conditionals
    ]
    return np.vstack(rows)


def conditional_f_information(
    kernel: DivergenceKernel,
    weights: Sequence[float] | np.ndarray,
    conditionals: Sequence,
    marginal: Distribution | np.ndarray,
) -> float:
    """Weighted divergence sum_w alpha_w D_f(p_w || q) for a mixture with
    sum_w alpha_w p_w = q.  Equals the f-information of the induced joint."""
    w = np.asarray(weights, dtype=float)
    P = _stack_conditionals(conditionals)
    q = marginal.probs if isinstance(marginal, Distribution) else _as_prob_vector(marginal, "marginal")
    _validate_mixture(w, P, q)
    total = 0.0
    for alpha, row in zip(w, P):
        if alpha <= 0.0:
            continue
        total += alpha * f_divergence(kernel, row, q)
    return float(total)


def beta_norm(beta: float, p: Distribution | np.ndarray) -> float:
    """l^beta norm of a distribution, (sum p_i^beta)^(1/beta), beta >= 2.

    Lies in [m^((1-beta)/beta), 1]; equals 1 exactly at point masses.
    """
    if not math.isfinite(beta) or beta < 2.0:
        raise ValueError("beta must be >= 2")
    vec = p.probs if isinstance(p, Distribution) else _as_prob_vector(p)
    return float((vec**beta).sum() ** (1.0 / beta))


def arimoto_conditional_entropy(
    beta: float,
    weights: Sequence[float] | np.ndarray,
    conditionals: Sequence,
) -> float:
    """Arimoto conditional entropy of order beta >= 2, in nats:
    beta/(1-beta) * log sum_w alpha_w ||p_w||_beta."""
    if not math.isfinite(beta) or beta < 2.0:
        raise ValueError("beta must be >= 2")
    w = np.asarray(weights, dtype=float)
    P = _stack_conditionals(conditionals)
    _validate_mixture(w, P, None)
    k = float(w @ (P**beta).sum(axis=1) ** (1.0 / beta))
    return beta / (1.0 - beta) * math.log(k)


def decompose_joint(joint: JointDistribution) -> tuple[Distribution, Channel]:
    """Split a joint pmf into the X-marginal and the forward channel.

    X-symbols with zero mass are dropped (support restriction), so the
    returned channel is defined everywhere.  Reassembling the joint from the
    pieces reproduces the input on the restricted support.
    """
    px = joint.marginal_x()
    keep = px > 0.0
    if int(keep.sum()) < 2:
        raise ValueError("support of X must contain at least 2 symbols")
    rows = joint.p_xy[keep]
    q = px[keep]
    cols = (rows / q[:, None]).T
    return Distribution(q / q.sum()), Channel(cols)


def joint_from_marginal_channel(
    q: Distribution | np.ndarray, T: Channel | np.ndarray
) -> JointDistribution:
    """Assemble P(X=x, Y=y) = q_x * T[y, x] from a marginal and a channel."""
    qv = q.probs if isinstance(q, Distribution) else _as_prob_vector(q, "q")
    ch = T if isinstance(T, Channel) else Channel(T)
    if ch.m != qv.size:
        raise ValueError("channel input alphabet does not match the marginal")
    return JointDistribution((ch.matrix * qv[None, :]).T)


def bsc_joint(q: float, delta: float) -> JointDistribution:
    """Joint pmf of a binary source P(X=1) = q through a binary symmetric
    channel with crossover probability delta."""
    q = _check_unit_interval(q, "q")
    delta = _check_unit_interval(delta, "delta")
    marginal = np.array([1.0 - q, q])
    channel = np.array([[1.0 - delta, delta], [delta, 1.0 - delta]])
    return joint_from_marginal_channel(marginal, channel)


def resolve_functional(
    kernel: DivergenceKernel,
    reference: Distribution | np.ndarray | None = None,
) -> Callable[[np.ndarray], np.ndarray]:
    """Resolve a kernel to a vectorized simplex functional.

    Divergence kinds close over a full-support reference distribution and map
    p to D_f(p || reference); entropy and norm kinds ignore the reference.
    The returned callable accepts a (k, m) array of row-distributions and
    returns a length-k vector.
    """
    if kernel.is_divergence:
        if reference is None:
            raise ValueError(f"{kernel.kind} kernel needs a reference distribution")
        ref = reference.probs if isinstance(reference, Distribution) else np.asarray(reference, dtype=float)
        if np.any(ref <= 0.0):
            raise ValueError("divergence reference must have full support")
        kind = kernel.kind

        if kind == "kl":

            def fn(P: np.ndarray) -> np.ndarray:
                P = np.atleast_2d(P)
                terms = np.zeros_like(P)
                mask = P > 0.0
                ratio = np.where(mask, P, 1.0) / ref[None, :]
                terms[mask] = (P * np.log(ratio))[mask]
                return terms.sum(axis=1)

        elif kind == "chi2":

            def fn(P: np.ndarray) -> np.ndarray:
                P = np.atleast_2d(P)
                d = P - ref[None, :]
                return (d * d / ref[None, :]).sum(axis=1)

        else:  # tv

            def fn(P: np.ndarray) -> np.ndarray:
                P = np.atleast_2d(P)
                return 0.5 * np.abs(P - ref[None, :]).sum(axis=1)

        return fn

    if kernel.kind == "entropy":

        def fn(P: np.ndarray) -> np.ndarray:
            P = np.atleast_2d(P)
            terms = np.zeros_like(P)
            mask = P > 0.0
            terms[mask] = (P * np.log(np.where(mask, P, 1.0)))[mask]
            return -terms.sum(axis=1)

        return fn

    beta = float(kernel.beta)  # norm

    def fn(P: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(P)
        return (P**beta).sum(axis=1) ** (1.0 / beta)

    return fn


def load_joint(source: str | Path | dict) -> JointDistribution:
    """Load a joint distribution from JSON.

    Accepted forms: {"p_xy": [[...]]} with a row-major m x n pmf, or
    {"q": [...], "T": [[...]]} with a length-m marginal and a column-
    stochastic n x m channel matrix.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = source
    if not isinstance(payload, dict):
        raise ValueError("joint distribution file must hold a JSON object")
    if "p_xy" in payload:
        return JointDistribution(np.asarray(payload["p_xy"], dtype=float))
    if "q" in payload and "T" in payload:
        return joint_from_marginal_channel(
            np.asarray(payload["q"], dtype=float),
            np.asarray(payload["T"], dtype=float),
        )
    raise ValueError('expected fields "p_xy" or "q" and "T"')
