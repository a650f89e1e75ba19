"""Closed-form limit curves and index values the estimates are checked against.

Each model packages the exact limit behaviour of one system family: the
curve psi(s) = lim P(M_n <= u_n(s)) where one exists, the partial indices
(extrema of log_s psi), the tail exponents at s -> 0 and s -> 1, and the
Definition-2 matching index where the model has one.  Everything here is
deterministic; Monte Carlo enters only on the estimation side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .copulas import (
    ArchimedeanGenerator,
    IndependenceGenerator,
    TiltedGenerator,
    partial_indices_archimedean,
    psi_archimedean,
    psi_tilted,
)
from .sampling import Degenerate, Distribution, Pareto, TwoPoint
from .systems import (
    BranchingHereditySystem,
    DuplicatedIidSystem,
    ExchangeableCopulaSystem,
    GeometricThresholdSystem,
    MixtureSpikeSystem,
    MonotoneTransformSystem,
    PowerLawGraphSystem,
    RandomThresholdSystem,
    SeriesSystem,
    SizeJitterSystem,
    StableSizeGumbelSystem,
)

__all__ = [
    "ReferenceModel",
    "ArchimedeanLimit",
    "TiltedArchimedeanLimit",
    "DuplicatedIidLimit",
    "SpikeMixtureLimit",
    "FixedThresholdLimit",
    "RandomThresholdLimit",
    "TwoPointThresholdLimit",
    "StableSizeGumbelLimit",
    "GraphActivityLimit",
    "BranchingHeredityIndex",
    "MaxStableLaw",
    "mixed_max_stable_cdf",
    "psi_reference",
    "reference_for",
]


class ReferenceModel:
    """Base: a named limit model with optional curve and index values."""

    name = "reference"

    def psi(self, s):
        raise NotImplementedError(f"{self.name} has no closed-form limit curve")

    def indices(self) -> dict:
        """theta_minus/theta_plus/theta0/theta1/theta_def2; None where unknown."""
        return {
            "theta_minus": None, "theta_plus": None,
            "theta0": None, "theta1": None, "theta_def2": None,
        }

    def __repr__(self):
        return self.name


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0.0) | (s >= 1.0)):
        raise ValueError("s must lie strictly inside (0, 1)")
    return s


class ArchimedeanLimit(ReferenceModel):
    """Limit curve f(-ln s / mu) of an exchangeable series, finite frailty mean."""

    def __init__(self, gen: ArchimedeanGenerator):
        if not math.isfinite(gen.mu):
            raise ValueError(f"{gen.name}: infinite frailty mean, no finite-mean limit curve")
        self.gen = gen
        self.name = f"archimedean_limit({gen.name})"

    def psi(self, s):
        return psi_archimedean(self.gen, _check_s(s))

    def indices(self):
        tm, tp = partial_indices_archimedean(self.gen)
        return {
            "theta_minus": tm, "theta_plus": tp,
            # the slope attains x0/mu in the deep tail and 1 near s = 1
            "theta0": tm, "theta1": tp,
            "theta_def2": 1.0 if isinstance(self.gen, IndependenceGenerator) else None,
        }


class TiltedArchimedeanLimit(ReferenceModel):
    """Limit curve f(-exp(-gamma) ln s / mu) under the power tilt."""

    def __init__(self, base: ArchimedeanGenerator, gamma: float):
        if isinstance(base, TiltedGenerator):
            base, gamma = base.base, base.gamma + gamma
        if not math.isfinite(base.mu):
            raise ValueError(f"{base.name}: infinite frailty mean")
        if gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {gamma}")
        self.base = base
        self.gamma = float(gamma)
        self.name = f"tilted_limit({base.name}, gamma={self.gamma:g})"

    def psi(self, s):
        return psi_tilted(self.base, self.gamma, _check_s(s))

    def indices(self):
        tm, tp = partial_indices_archimedean(self.base, self.gamma)
        return {
            "theta_minus": tm, "theta_plus": tp, "theta0": tm, "theta1": tp,
            "theta_def2": tp if isinstance(self.base, IndependenceGenerator) else None,
        }


class DuplicatedIidLimit(ReferenceModel):
    """psi(s) = s^(1/m): both index notions agree at 1/m."""

    def __init__(self, m: int):
        if m < 2:
            raise ValueError(f"m must be at least 2, got {m}")
        self.m = int(m)
        self.theta = 1.0 / self.m
        self.name = f"duplicated_iid_limit(m={self.m})"

    def psi(self, s):
        return _check_s(s) ** self.theta

    def indices(self):
        t = self.theta
        return {"theta_minus": t, "theta_plus": t, "theta0": t, "theta1": t, "theta_def2": t}


class SpikeMixtureLimit(ReferenceModel):
    """Limit curve of the spiked series, given implicitly by its inverse.

    With w >= 0 solving w + 1 - exp(-gamma w) = -ln s, the curve is
    psi = exp(-(1 + gamma) w); equivalently the inverse map is
    s(psi) = psi^(1/(1+gamma)) exp(psi^(gamma/(1+gamma)) - 1).  The slope
    runs from 1 near s = 1 up to 1 + gamma in the deep tail.
    """

    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)
        self.name = f"spike_mixture_limit(gamma={self.gamma:g})"

    def inverse(self, v):
        """s such that psi(s) = v."""
        v = np.asarray(v, dtype=float)
        g = self.gamma
        return v ** (1.0 / (1.0 + g)) * np.exp(v ** (g / (1.0 + g)) - 1.0)

    def psi(self, s):
        s = _check_s(s)
        lo = np.zeros_like(s)
        hi = np.ones_like(s)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.inverse(mid) <= s
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return out if out.ndim else float(out)

    def indices(self):
        return {
            "theta_minus": 1.0, "theta_plus": 1.0 + self.gamma,
            "theta0": 1.0 + self.gamma, "theta1": 1.0, "theta_def2": None,
        }


class FixedThresholdLimit(ReferenceModel):
    """psi(s) = 0 v (2 - 1/s): vanishing fixed-threshold exceedance windows.

    The curve is not a power law on any neighbourhood of 0: theta_plus is
    infinite and no Definition-2 index exists.
    """

    name = "fixed_threshold_limit"

    def psi(self, s):
        s = _check_s(s)
        out = np.maximum(0.0, 2.0 - 1.0 / s)
        return out if out.ndim else float(out)

    def indices(self):
        return {
            "theta_minus": 1.0, "theta_plus": math.inf,
            "theta0": math.inf, "theta1": 1.0, "theta_def2": None,
        }


class RandomThresholdLimit(ReferenceModel):
    """psi(s) = g(f^{-1}(s)) with f(t) = E zeta/(t+zeta), g(t) = E (zeta-t)+.

    Atomic threshold laws evaluate the two means exactly; continuous laws
    go through adaptive quadrature on the quantile scale with the kink of
    (zeta - t)+ passed to the integrator, keeping the curve good to ~1e-10.
    """

    def __init__(self, zeta: Distribution):
        m = zeta.mean()
        if not math.isfinite(m) or abs(m - 1.0) > 1e-9:
            raise ValueError(f"threshold law must have mean 1, got {m}")
        self.zeta = zeta
        self._atoms = isinstance(zeta, (TwoPoint, Degenerate))
        self.name = f"random_threshold_limit({type(zeta).__name__.lower()})"

    def _mean(self, fn, kink: float | None = None) -> float:
        if self._atoms:
            return float(self.zeta.expect(fn))
        from scipy.integrate import quad

        points = None
        if kink is not None:
            p = float(self.zeta.cdf(kink))
            if 1e-12 < p < 1.0 - 1e-12:
                points = [p]
        val, _ = quad(lambda p: float(fn(self.zeta.quantile(p))), 0.0, 1.0,
                      points=points, limit=300, epsabs=1e-12, epsrel=1e-12)
        return val

    def f(self, t: float) -> float:
        return self._mean(lambda z: z / (t + z))

    def g(self, t: float) -> float:
        return self._mean(lambda z: np.maximum(z - t, 0.0), kink=t)

    def f_inv(self, s: float) -> float:
        lo, hi = 0.0, 1.0
        for _ in range(200):
            if self.f(hi) < s:
                break
            hi *= 2.0
        else:
            raise RuntimeError("no bracket for f_inv")
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            if self.f(mid) >= s:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def psi(self, s):
        s = _check_s(s)
        out = np.array([self.g(self.f_inv(float(si))) for si in np.atleast_1d(s)])
        return out if np.ndim(s) else float(out[0])

    def theta1(self) -> float:
        """1 / E[1/zeta]: the slope of the curve at s -> 1."""
        return 1.0 / self._mean(lambda z: 1.0 / z)

    def indices(self):
        out = {"theta_minus": None, "theta_plus": None, "theta0": None,
               "theta1": self.theta1(), "theta_def2": None}
        if isinstance(self.zeta, (TwoPoint, Degenerate)):
            # bounded thresholds: the curve hits zero, so the sup slope blows up
            out["theta_plus"] = math.inf
            out["theta0"] = math.inf
            out["theta_minus"] = out["theta1"]
        elif isinstance(self.zeta, Pareto):
            out["theta0"] = self.zeta.a - 1.0
        return out


class TwoPointThresholdLimit(ReferenceModel):
    """Explicit two-atom threshold curve: zeta on {1-delta, 1+delta}.

    f inverts in closed form: f^{-1}(s) = (1 + sqrt(1 - 4 s (1-s) delta^2))
    / (2 s) - 1, and the curve ends at theta1 = 1 - delta^2.
    """

    def __init__(self, delta: float):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.delta = float(delta)
        self.name = f"two_point_threshold_limit(delta={self.delta:g})"

    def f_inv(self, s):
        s = np.asarray(s, dtype=float)
        d2 = self.delta**2
        return (1.0 + np.sqrt(1.0 - 4.0 * s * (1.0 - s) * d2)) / (2.0 * s) - 1.0

    def psi(self, s):
        s = _check_s(s)
        t = self.f_inv(s)
        lo, hi = 1.0 - self.delta, 1.0 + self.delta
        out = 0.5 * (np.maximum(lo - t, 0.0) + np.maximum(hi - t, 0.0))
        return out if out.ndim else float(out)

    def indices(self):
        t1 = 1.0 - self.delta**2
        return {
            "theta_minus": t1, "theta_plus": math.inf,
            "theta0": math.inf, "theta1": t1, "theta_def2": None,
        }


class StableSizeGumbelLimit(ReferenceModel):
    """The two-index split model: curve s^exp(-gamma beta), matching at exp(-gamma)."""

    def __init__(self, beta: float, gamma: float):
        if not 0.0 < beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
        if gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {gamma}")
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.theta_def1 = math.exp(-gamma * beta)
        self.theta_def2 = math.exp(-gamma)
        self.name = f"stable_size_limit(beta={self.beta:g}, gamma={self.gamma:g})"

    def psi(self, s):
        return _check_s(s) ** self.theta_def1

    def indices(self):
        t = self.theta_def1
        return {"theta_minus": t, "theta_plus": t, "theta0": t, "theta1": t,
                "theta_def2": self.theta_def2}


class GraphActivityLimit(ReferenceModel):
    """Aggregate-activity maxima on the power-law graph.

    The index is theta = 1/(1 + EK) with EK = zeta(beta-1)/zeta(beta); the
    aggregate tail carries the factor 1 + EK, and the two cancel in the max
    law: M_n / v(n) converges to the standard Frechet law exp(-x^-a), while
    the independent comparator built from n copies of the aggregate
    marginal converges to exp(-(1+EK) x^-a).
    """

    def __init__(self, beta: float, a: float = 1.0, x_min: float = 1.0):
        if beta <= 2.0:
            raise ValueError(f"beta must exceed 2, got {beta}")
        from scipy.special import zeta as _zeta

        self.beta = float(beta)
        self.a = float(a)
        self.x_min = float(x_min)
        self.mean_degree = float(_zeta(beta - 1.0) / _zeta(beta))
        self.frechet_scale = 1.0 + self.mean_degree
        self.theta = 1.0 / self.frechet_scale
        self.name = f"graph_activity_limit(beta={self.beta:g}, a={self.a:g})"

    def psi(self, s):
        return _check_s(s) ** self.theta

    def max_limit_cdf(self, x):
        """Limit law of M_n / v(n), v(n) = x_min n^(1/a)."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(x > 0.0, np.exp(-np.maximum(x, 1e-300) ** (-self.a)), 0.0)
        return out if out.ndim else float(out)

    def comparator_limit_cdf(self, x):
        """Limit law of the max of n independent aggregate marginals, same norming."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(
                x > 0.0,
                np.exp(-self.frechet_scale * np.maximum(x, 1e-300) ** (-self.a)),
                0.0,
            )
        return out if out.ndim else float(out)

    def indices(self):
        t = self.theta
        return {"theta_minus": t, "theta_plus": t, "theta0": t, "theta1": t, "theta_def2": t}


class BranchingHeredityIndex(ReferenceModel):
    """Definition-2 index of the hereditary-score branching model.

    No closed-form limit curve: the population mixing law has no explicit
    density, so verification compares psi_hat against E F(u)^(theta Z_n)
    directly at theta = (1 - a^gamma)/(1 - a^gamma / mu).
    """

    def __init__(self, a: float, gamma: float, mu: float):
        if not 0.0 < a < 1.0:
            raise ValueError(f"a must lie in (0, 1), got {a}")
        if not 0.0 < gamma <= 2.0:
            raise ValueError(f"gamma must lie in (0, 2], got {gamma}")
        if mu <= 1.0:
            raise ValueError(f"mu must exceed 1, got {mu}")
        self.a = float(a)
        self.gamma = float(gamma)
        self.mu = float(mu)
        ag = self.a**self.gamma
        self.theta_def2 = (1.0 - ag) / (1.0 - ag / self.mu)
        self.name = f"branching_index(a={self.a:g}, gamma={self.gamma:g}, mu={self.mu:g})"

    def indices(self):
        return {"theta_minus": None, "theta_plus": None, "theta0": None, "theta1": None,
                "theta_def2": self.theta_def2}


# ---------------------------------------------------------------------------
# mixed max-stable laws

@dataclass
class MaxStableLaw:
    """One of the three max-stable families with affine norming."""

    family: str          # "gumbel" | "frechet" | "weibull"
    alpha: float | None = None
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in ("gumbel", "frechet", "weibull"):
            raise ValueError(f"unknown max-stable family {self.family!r}")
        if self.family in ("frechet", "weibull"):
            if self.alpha is None or self.alpha <= 0:
                raise ValueError(f"{self.family} needs a positive alpha, got {self.alpha}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def log_cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        if self.family == "gumbel":
            return -np.exp(-z)
        if self.family == "frechet":
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(z > 0.0, -np.maximum(z, 1e-300) ** (-self.alpha), -np.inf)
        return np.where(z < 0.0, -((-np.minimum(z, 0.0)) ** self.alpha), 0.0)

    def cdf(self, x):
        return np.exp(self.log_cdf(x))


def mixed_max_stable_cdf(law: MaxStableLaw, zeta: Distribution, theta: float, x):
    """H(x) = E G(x)^(theta zeta): the limit law of maxima under random mixing.

    Uses the frailty's Laplace transform when it has one in closed form,
    quadrature otherwise.
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    x = np.asarray(x, dtype=float)
    u = -theta * law.log_cdf(x)  # >= 0, possibly +inf
    try:
        out = np.where(np.isinf(u), 0.0, zeta.laplace(np.where(np.isinf(u), 0.0, u)))
    except NotImplementedError:
        flat = np.atleast_1d(u)
        vals = np.array([
            0.0 if math.isinf(ui) else float(zeta.expect(lambda z: np.exp(-ui * z)))
            for ui in flat
        ])
        out = vals.reshape(u.shape) if u.ndim else vals[0]
    out = np.asarray(out)
    return out if out.ndim else float(out)


def psi_reference(model: ReferenceModel, s):
    """The model's limit curve at s."""
    return model.psi(s)


def reference_for(system: SeriesSystem) -> ReferenceModel | None:
    """The closed-form limit model matching a system, where one exists."""
    if isinstance(system, (MonotoneTransformSystem, SizeJitterSystem)):
        return reference_for(system.base)
    if isinstance(system, ExchangeableCopulaSystem):
        gen = system.gen
        if isinstance(gen, TiltedGenerator):
            if math.isfinite(gen.base.mu):
                return TiltedArchimedeanLimit(gen.base, gen.gamma)
            return None
        if math.isfinite(gen.mu):
            return ArchimedeanLimit(gen)
        return None
    if isinstance(system, DuplicatedIidSystem):
        return DuplicatedIidLimit(system.m)
    if isinstance(system, MixtureSpikeSystem):
        return SpikeMixtureLimit(system.gamma)
    if isinstance(system, GeometricThresholdSystem):
        return FixedThresholdLimit()
    if isinstance(system, RandomThresholdSystem):
        return RandomThresholdLimit(system.zeta)
    if isinstance(system, StableSizeGumbelSystem):
        return StableSizeGumbelLimit(system.beta, system.gamma)
    if isinstance(system, BranchingHereditySystem):
        return BranchingHeredityIndex(system.a, system.gamma, system.mu)
    if isinstance(system, PowerLawGraphSystem):
        return GraphActivityLimit(system.beta, system.a, system.x_min)
    return None
