"""Series-scheme models: what gets simulated.

A system describes one triangular-array model: at stage n a series holds
nu_n terms (possibly random) with common marginal d.f. F_n, and M_n is the
maximum over the terms.  Each system knows how to draw (nu_n, M_n) exactly,
and exposes the calibration functional

    mean_F_pow_nu:  E F_n(u)^(r nu_n)

either in closed form or through frozen Monte Carlo pools.  r = 1 is the
threshold-calibration case; general r > 0 is the comparand used when
matching against maxima of a theta-fraction of independent terms.

Systems are immutable, picklable descriptions; all randomness flows through
the generator handed to the sampling methods, so replicate batches can be
farmed out to workers without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .copulas import (
    ArchimedeanGenerator,
    ClaytonGenerator,
    FrankGenerator,
    GumbelHougaardGenerator,
    IndependenceGenerator,
    TiltedGenerator,
    default_tilt_power,
    diag_cdf,
    diag_inverse,
)
from .sampling import (
    Degenerate,
    Distribution,
    Gamma,
    Pareto,
    PositiveStable,
    SymmetricStable,
    TwoPoint,
)

__all__ = [
    "ConfigError",
    "SeriesSystem",
    "ExchangeableCopulaSystem",
    "DuplicatedIidSystem",
    "MixtureSpikeSystem",
    "GeometricThresholdSystem",
    "RandomThresholdSystem",
    "StableSizeGumbelSystem",
    "BranchingHereditySystem",
    "PowerLawGraphSystem",
    "PowerTransform",
    "MonotoneTransformSystem",
    "SizeJitterSystem",
    "MeanFPower",
    "Calibrator",
    "sample_replicate",
    "mean_F_pow_nu",
    "build_calibration_pool",
    "build_system",
]


class ConfigError(ValueError):
    """Invalid system or run configuration."""


class SeriesSystem:
    """Base class for series-scheme models."""

    name = "series"
    random_size = True
    has_exact_mean = False      # exact_mean_F_pow_nu implemented
    has_exact_max_cdf = False   # exact_max_cdf implemented
    calibration_kind = "exact"  # or "nu_pool" / "marginal_pool"
    u_domain = (0.0, 1.0)       # open interval the thresholds live in

    def validate_n(self, n: int) -> None:
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise ConfigError(f"{self.name}: stage n must be an integer >= 2, got {n!r}")

    def sample_batch(self, n: int, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """count exact draws of (nu_n, M_n); returns (int array, float array)."""
        raise NotImplementedError

    def sample_nu(self, n: int, count: int, rng) -> np.ndarray:
        """Marginal law of nu_n only (cheaper than sample_batch where possible)."""
        return self.sample_batch(n, count, rng)[0]

    def marginal_cdf(self, n: int, x):
        """Common per-term d.f. F_n."""
        raise NotImplementedError(f"{self.name} has no closed-form marginal")

    def sample_marginal(self, n: int, count: int, rng) -> np.ndarray:
        """Draws from F_n, for systems whose marginal is only samplable."""
        raise NotImplementedError(f"{self.name} has no marginal sampler")

    def exact_mean_F_pow_nu(self, n: int, u, r: float = 1.0):
        raise NotImplementedError

    def exact_max_cdf(self, n: int, u):
        raise NotImplementedError

    def closed_form_u(self, n: int, s):
        """Threshold with E F_n(u)^nu_n = s where invertible in closed form."""
        return None

    def __repr__(self):
        return self.name


# ---------------------------------------------------------------------------
# exchangeable copula series

class ExchangeableCopulaSystem(SeriesSystem):
    """Deterministic size n, uniform marginals, Archimedean dependence.

    The max has the exact d.f. f(n phi(u)); sampling goes through the
    frailty: M = f(E / (n zeta)) with one exponential E, since the minimum
    of the n exponentials in the frailty representation is Exp(n).
    """

    random_size = False
    has_exact_mean = True
    has_exact_max_cdf = True

    def __init__(self, gen):
        if not isinstance(gen, (ArchimedeanGenerator, TiltedGenerator)):
            raise ConfigError(f"gen must be an Archimedean structure, got {type(gen).__name__}")
        self.gen = gen
        self.name = f"exchangeable_copula({gen.name})"

    def validate_n(self, n):
        super().validate_n(n)
        if isinstance(self.gen, TiltedGenerator):
            if n < 3:
                raise ConfigError(f"{self.name}: tilted structure needs n >= 3")
            try:
                self.gen.power_at(n)
            except ValueError as exc:
                raise ConfigError(f"{self.name}: {exc}") from None

    def _fixed(self, d):
        return self.gen.fixed(d) if isinstance(self.gen, TiltedGenerator) else self.gen

    def sample_batch(self, n, count, rng):
        g = self._fixed(n)
        zeta = np.asarray(g.frailty.sample(rng, count), dtype=float)
        e = rng.standard_exponential(count)
        m = g.f(e / (n * zeta))
        return np.full(count, n, dtype=np.int64), m

    def sample_nu(self, n, count, rng):
        return np.full(count, n, dtype=np.int64)

    def marginal_cdf(self, n, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def exact_mean_F_pow_nu(self, n, u, r=1.0):
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0) ** (r * n)

    def exact_max_cdf(self, n, u):
        return diag_cdf(self.gen, n, u)

    def max_cdf_given_size(self, d, u):
        return diag_cdf(self.gen, d, u)

    def max_inverse_given_size(self, d, v):
        return diag_inverse(self.gen, d, v)

    def closed_form_u(self, n, s):
        return np.asarray(s, dtype=float) ** (1.0 / n)


class DuplicatedIidSystem(SeriesSystem):
    """Series of n terms built from ceil(n/m) iid uniforms, each repeated m times.

    The classical clustered-maxima sanity model: P(M_n <= u) = u^ceil(n/m)
    exactly, so the limit curve is s^(1/m).
    """

    random_size = False
    has_exact_mean = True
    has_exact_max_cdf = True

    def __init__(self, m: int):
        if not isinstance(m, (int, np.integer)) or m < 2:
            raise ConfigError(f"duplication factor m must be an integer >= 2, got {m!r}")
        self.m = int(m)
        self.name = f"duplicated_iid(m={self.m})"

    @staticmethod
    def _groups(n, m):
        return -(-n // m)

    def sample_batch(self, n, count, rng):
        g = self._groups(n, self.m)
        m_val = rng.random(count) ** (1.0 / g)
        return np.full(count, n, dtype=np.int64), m_val

    def sample_nu(self, n, count, rng):
        return np.full(count, n, dtype=np.int64)

    def marginal_cdf(self, n, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def exact_mean_F_pow_nu(self, n, u, r=1.0):
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0) ** (r * n)

    def exact_max_cdf(self, n, u):
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0) ** self._groups(n, self.m)

    def max_cdf_given_size(self, d, u):
        d = np.asarray(d)
        g = -(-d // self.m)
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0) ** g

    def max_inverse_given_size(self, d, v):
        d = np.asarray(d)
        g = -(-d // self.m)
        return np.asarray(v, dtype=float) ** (1.0 / g)

    def closed_form_u(self, n, s):
        return np.asarray(s, dtype=float) ** (1.0 / n)


class MixtureSpikeSystem(SeriesSystem):
    """n - 1 iid uniforms plus one spiked term with d.f. x^(gamma n).

    The common (exchangeable-position) marginal is the mixture
    F_n(x) = x (1 + (x^(gamma n - 1) - 1)/n) while the max d.f. is the
    exact product x^((1+gamma) n - 1).  The gap between F_n^n and the max
    law is the point of the model: the limit curve has theta_minus = 1 but
    theta_plus = 1 + gamma.
    """

    random_size = False
    has_exact_mean = True
    has_exact_max_cdf = True

    def __init__(self, gamma: float):
        if not gamma > 0:
            raise ConfigError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)
        self.name = f"mixture_spike(gamma={self.gamma:g})"

    def sample_batch(self, n, count, rng):
        # constructive draw: plain block max and the spiked term separately
        v1 = rng.random(count)
        v2 = rng.random(count)
        m = np.maximum(v1 ** (1.0 / (n - 1)), v2 ** (1.0 / (self.gamma * n)))
        return np.full(count, n, dtype=np.int64), m

    def sample_nu(self, n, count, rng):
        return np.full(count, n, dtype=np.int64)

    def marginal_cdf(self, n, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = x * (1.0 + (x ** (self.gamma * n - 1.0) - 1.0) / n)
        return np.where(x == 0.0, 0.0, out)

    def exact_mean_F_pow_nu(self, n, u, r=1.0):
        return self.marginal_cdf(n, u) ** (r * n)

    def exact_max_cdf(self, n, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return u ** ((1.0 + self.gamma) * n - 1.0)


class GeometricThresholdSystem(SeriesSystem):
    """Fixed threshold 1 - eps: the series runs until a term exceeds it.

    nu is geometric with success probability eps and M = 1 - eps + eps U
    independently of nu.  eps may be pinned or scheduled as n^(-q); the
    limit curve 0 v (2 - 1/s) is reached as eps -> 0 and carries no
    extremal index of either kind.
    """

    def __init__(self, eps: float | None = None, eps_exponent: float | None = None):
        if (eps is None) == (eps_exponent is None):
            raise ConfigError("give exactly one of eps, eps_exponent")
        if eps is not None and not 0.0 < eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {eps}")
        if eps_exponent is not None and not eps_exponent > 0:
            raise ConfigError(f"eps_exponent must be positive, got {eps_exponent}")
        self.eps = None if eps is None else float(eps)
        self.eps_exponent = None if eps_exponent is None else float(eps_exponent)
        if self.eps is not None:
            self.name = f"geometric_threshold(eps={self.eps:g})"
        else:
            self.name = f"geometric_threshold(eps=n^-{self.eps_exponent:g})"

    has_exact_mean = True
    has_exact_max_cdf = True

    def eps_at(self, n) -> float:
        if self.eps is not None:
            return self.eps
        return float(n) ** (-self.eps_exponent)

    def sample_batch(self, n, count, rng):
        eps = self.eps_at(n)
        nu = rng.geometric(eps, count).astype(np.int64)
        m = 1.0 - eps + eps * rng.random(count)
        return nu, m

    def sample_nu(self, n, count, rng):
        return rng.geometric(self.eps_at(n), count).astype(np.int64)

    def marginal_cdf(self, n, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def exact_mean_F_pow_nu(self, n, u, r=1.0):
        eps = self.eps_at(n)
        t = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) ** r
        return eps * t / (1.0 - (1.0 - eps) * t)

    def exact_max_cdf(self, n, u):
        eps = self.eps_at(n)
        return np.clip((np.asarray(u, dtype=float) - (1.0 - eps)) / eps, 0.0, 1.0)

    def closed_form_u(self, n, s):
        eps = self.eps_at(n)
        s = np.asarray(s, dtype=float)
        return s / (eps + (1.0 - eps) * s)


class RandomThresholdSystem(SeriesSystem):
    """Random threshold 1 - zeta/n with E zeta = 1; series ends at first exceedance.

    Given zeta the size machinery is the geometric-threshold one with
    eps = zeta/n.  The recorded maximum is the exceedant observation, so
    as a (threshold, value) pair it carries the law of a draw conditioned
    on the exceedance event; that conditioning reweights the threshold by
    its exceedance probability zeta/n, i.e. the maximum sees the
    size-biased zeta while the size keeps the plain one.  Mixing the two
    expectations bends the limit curve away from any single power of s
    and splits the partial indices.  Draws with zeta >= n are rejected
    and resampled (their probability is negligible at the stage sizes of
    interest and they carry no threshold).
    """

    has_exact_mean = True
    has_exact_max_cdf = True

    def __init__(self, zeta: Distribution):
        try:
            m = zeta.mean()
        except NotImplementedError as exc:
            raise ConfigError(f"threshold law needs an implemented mean: {exc}") from None
        if not math.isfinite(m) or abs(m - 1.0) > 1e-9:
            raise ConfigError(f"threshold law must have mean 1, got {m!r}")
        try:
            self.zeta_biased = zeta.size_biased()
        except (NotImplementedError, ValueError) as exc:
            raise ConfigError(f"threshold law needs a size-biased form: {exc}") from None
        self.zeta = zeta
        self.name = f"random_threshold({type(zeta).__name__.lower()})"

    def _draw(self, dist, n, count, rng):
        z = np.asarray(dist.sample(rng, count), dtype=float)
        for _ in range(100):
            bad = z >= n
            k = int(bad.sum())
            if k == 0:
                return z
            z[bad] = dist.sample(rng, k)
        raise ConfigError(f"{self.name}: threshold law puts too much mass above n={n}")

    def sample_batch(self, n, count, rng):
        z = self._draw(self.zeta, n, count, rng)
        nu = rng.geometric(np.clip(z / n, 1e-300, 1.0), count).astype(np.int64)
        zb = self._draw(self.zeta_biased, n, count, rng)
        x = 1.0 - zb / n
        m = x + (1.0 - x) * rng.random(count)
        return nu, m

    def sample_nu(self, n, count, rng):
        z = self._draw(self.zeta, n, count, rng)
        return rng.geometric(np.clip(z / n, 1e-300, 1.0), count).astype(np.int64)

    def marginal_cdf(self, n, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def _mix(self, n, h) -> float:
        # E[h(zeta) | zeta < n]; the conditioning mass is ~1 at working sizes
        below = self.zeta.expect(lambda z: h(z) * (z < n))
        norm = float(self.zeta.cdf(n))
        return below / norm

    def exact_mean_F_pow_nu(self, n, u, r=1.0):
        u_in = np.asarray(u, dtype=float)
        t = np.clip(np.atleast_1d(u_in), 0.0, 1.0) ** r
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            def h(z, ti=ti):
                x = 1.0 - np.asarray(z) / n
                return (1.0 - x) * ti / (1.0 - x * ti)
            out[i] = self._mix(n, h)
        return out.reshape(u_in.shape) if u_in.ndim else float(out[0])

    def exact_max_cdf(self, n, u):
        # size-biased mixture: E[zeta * clip((u-x)/(1-x))] / E[zeta]
        # with x = 1 - zeta/n collapses to E (zeta - n(1-u))_+ / E zeta
        u_in = np.asarray(u, dtype=float)
        uu = np.clip(np.atleast_1d(u_in), 0.0, 1.0)
        den = self._mix(n, lambda z: np.asarray(z, dtype=float))
        out = np.empty_like(uu)
        for i, ui in enumerate(uu):
            w = n * (1.0 - ui)
            out[i] = self._mix(n, lambda z, w=w: np.maximum(np.asarray(z) - w, 0.0))
        out /= den
        return out.reshape(u_in.shape) if u_in.ndim else float(out[0])


class StableSizeGumbelSystem(SeriesSystem):
    """Positive stable size nu = max(1, round(n S)) over a power-tilted structure.

    Given nu the terms form a Gumbel-Hougaard vector of exponent
    alpha_n = ln n / (ln n - gamma), the same power schedule as the tilt,
    so the conditional max is V^(nu^(-1/alpha_n)).  The model splits the
    two index notions: the limit curve is s to the power exp(-gamma beta)
    while matching E F^(theta nu) holds at theta = exp(-gamma).
    """

    calibration_kind = "nu_pool"

    def __init__(self, beta: float, gamma: float):
        if not 0.0 < beta < 1.0:
            raise ConfigError(f"beta must lie in (0, 1), got {beta}")
        if not (math.isfinite(gamma) and gamma >= 0.0):
            raise ConfigError(f"gamma must be finite and non-negative, got {gamma}")
        self.beta = float(beta)
        self.gamma = float(gamma)
        self._stable = PositiveStable(self.beta)
        self.name = f"stable_size_gumbel(beta={self.beta:g}, gamma={self.gamma:g})"

    def validate_n(self, n):
        super().validate_n(n)
        if n < 3:
            raise ConfigError(f"{self.name}: needs n >= 3")
        try:
            default_tilt_power(n, self.gamma)
        except ValueError as exc:
            raise ConfigError(f"{self.name}: {exc}") from None

    def sample_nu(self, n, count, rng):
        s = self._stable.sample(rng, count)
        return np.maximum(1, np.rint(n * s)).astype(np.int64)

    def sample_batch(self, n, count, rng):
        nu = self.sample_nu(n, count, rng)
        alpha = default_tilt_power(n, self.gamma)
        v = rng.random(count)
        m = v ** (nu.astype(float) ** (-1.0 / alpha))
        return nu, m

    def marginal_cdf(self, n, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def closed_form_u(self, n, s):
        s = np.asarray(s, dtype=float)
        return np.exp(-((-np.log(s)) ** (1.0 / self.beta)) / n)


class BranchingHereditySystem(SeriesSystem):
    """Galton-Watson tree with inherited stable scores.

    Each particle's score is a times the parent score plus b times a fresh
    standard symmetric stable(gamma) innovation, with a^gamma + b^gamma = 1
    so the stationary marginal is again standard stable.  The series at
    stage n is generation n: nu = Z_n, M = max score in the generation.
    Offspring laws must put no mass at 0 (no extinction) and have mean > 1.
    """

    calibration_kind = "nu_pool"
    u_domain = (None, None)

    def __init__(self, offspring: dict, gamma: float, a: float, particle_budget: int = 1_000_000):
        vals, probs = [], []
        for k, p in sorted(offspring.items()):
            k = int(k)
            if k < 0 or p < 0:
                raise ConfigError(f"bad offspring entry {k}: {p}")
            vals.append(k)
            probs.append(float(p))
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError(f"offspring probabilities must sum to 1, got {sum(probs)}")
        if vals and vals[0] == 0 and probs[0] > 0:
            raise ConfigError("offspring law must put no mass at 0 (extinction excluded)")
        self.offspring_vals = np.array(vals, dtype=np.int64)
        self.offspring_probs = np.array(probs, dtype=float)
        self.mu = float(self.offspring_vals @ self.offspring_probs)
        if self.mu <= 1.0:
            raise ConfigError(f"offspring mean must exceed 1, got {self.mu}")
        if not 0.0 < a < 1.0:
            raise ConfigError(f"heredity weight a must lie in (0, 1), got {a}")
        if not 0.0 < gamma <= 2.0:
            raise ConfigError(f"stable exponent gamma must lie in (0, 2], got {gamma}")
        self.a = float(a)
        self.gamma = float(gamma)
        self.b = (1.0 - self.a**self.gamma) ** (1.0 / self.gamma)
        self.particle_budget = int(particle_budget)
        self._stable = SymmetricStable(self.gamma)
        self.name = f"branching_heredity(a={self.a:g}, gamma={self.gamma:g}, mu={self.mu:g})"

    def theta_def2(self) -> float:
        ag = self.a**self.gamma
        return (1.0 - ag) / (1.0 - ag / self.mu)

    def validate_n(self, n):
        super().validate_n(n)
        if self.mu**n > self.particle_budget:
            raise ConfigError(
                f"{self.name}: mean generation size mu^n = {self.mu**n:.3g} exceeds "
                f"the particle budget {self.particle_budget}; lower n or raise the budget"
            )

    def _offspring(self, rng, count):
        cum = np.cumsum(self.offspring_probs)
        idx = np.searchsorted(cum, rng.random(count), side="right")
        return self.offspring_vals[np.minimum(idx, len(cum) - 1)]

    def sample_batch(self, n, count, rng):
        # vectorized over all live particles of all trees in the batch
        scores = self._stable.sample(rng, count)  # stationary roots
        owner = np.arange(count)
        hard_cap = max(64 * self.particle_budget, 100_000_000)
        for _ in range(n):
            k = self._offspring(rng, scores.size)
            total = int(k.sum())
            if total > hard_cap:
                raise ConfigError(f"{self.name}: population blew past the hard particle cap")
            scores = self.a * np.repeat(scores, k) + self.b * self._stable.sample(rng, total)
            owner = np.repeat(owner, k)
        nu = np.bincount(owner, minlength=count).astype(np.int64)
        m = np.full(count, -np.inf)
        if scores.size:
            # owners are sorted; segment boundaries give per-tree maxima
            starts = np.flatnonzero(np.r_[True, owner[1:] != owner[:-1]])
            m[owner[starts]] = np.maximum.reduceat(scores, starts)
        return nu, m

    def sample_nu(self, n, count, rng):
        # population recursion only: multinomial split per generation
        z = np.ones(count, dtype=np.int64)
        for _ in range(n):
            picks = rng.multinomial(z, self.offspring_probs)
            z = picks @ self.offspring_vals
        return z

    def marginal_cdf(self, n, x):
        return self._stable.cdf(x)

    def sample_marginal(self, n, count, rng):
        return self._stable.sample(rng, count)


class PowerLawGraphSystem(SeriesSystem):
    """Directed power-law graph with aggregated heavy-tailed activities.

    Each of the n vertices draws K ~ Zipf(beta) and receives edges from
    D = min(K, n-1) distinct uniformly chosen other vertices; its aggregate
    is its own Pareto(a) activity plus those of the chosen vertices.  The
    series is the n aggregates; the aggregate tail is (1 + EK) times the
    single-activity tail, which is what drags the index below 1.
    """

    random_size = False
    calibration_kind = "marginal_pool"

    def __init__(self, beta: float, a: float = 1.0, x_min: float = 1.0):
        if beta <= 2.0:
            raise ConfigError(f"degree exponent beta must exceed 2, got {beta}")
        if a <= 0 or x_min <= 0:
            raise ConfigError(f"activity parameters must be positive, got a={a}, x_min={x_min}")
        # regular-variation conditions for the aggregate-tail factorization
        if beta < 3.0:
            if not a < beta - 2.0:
                raise ConfigError(f"need a < beta - 2 when beta < 3, got a={a}, beta={beta}")
        elif not a < (beta - 1.0) / 2.0:
            raise ConfigError(f"need a < (beta - 1)/2 when beta >= 3, got a={a}, beta={beta}")
        self.beta = float(beta)
        self.a = float(a)
        self.x_min = float(x_min)
        self._activity = Pareto(self.a, self.x_min)
        self.name = f"power_law_graph(beta={self.beta:g}, a={self.a:g})"

    u_domain = (0.0, None)

    def mean_degree(self) -> float:
        from scipy.special import zeta

        return float(zeta(self.beta - 1.0) / zeta(self.beta))

    def scale_at(self, n) -> float:
        """Fréchet norming v(n) = x_min n^(1/a)."""
        return self.x_min * float(n) ** (1.0 / self.a)

    def _degrees(self, n, rng):
        return np.minimum(rng.zipf(self.beta, n), n - 1)

    def _distinct_picks(self, n, d, rng):
        """src/pick arrays with per-vertex distinct picks, self excluded.

        Uniform distinct sets: big groups (collision-prone) go through a
        partial permutation, the rest through whole-group redraw rejection.
        Both paths draw uniformly among d-subsets of the other vertices.
        """
        big_bound = max(8, int(math.isqrt(n)))
        big = np.flatnonzero(d > big_bound)
        big_src_parts, big_pick_parts = [], []
        for v in big:
            picks = rng.permutation(n - 1)[: d[v]]
            picks += picks >= v
            big_src_parts.append(np.full(d[v], v))
            big_pick_parts.append(picks)
        d_small = d.copy()
        d_small[big] = 0
        src = np.repeat(np.arange(n), d_small)
        pick = rng.integers(0, n - 1, src.size)
        pick += pick >= src
        for _ in range(200):
            order = np.lexsort((pick, src))
            ps, ss = pick[order], src[order]
            dup = (ss[1:] == ss[:-1]) & (ps[1:] == ps[:-1])
            if not dup.any():
                break
            bad = np.unique(ss[1:][dup])
            mask = np.isin(src, bad)
            fresh = rng.integers(0, n - 1, int(mask.sum()))
            fresh += fresh >= src[mask]
            pick[mask] = fresh
        else:
            raise ConfigError(f"{self.name}: in-neighbor rejection failed to converge")
        if big.size:
            src = np.concatenate([src] + big_src_parts)
            pick = np.concatenate([pick] + big_pick_parts)
        return src, pick

    def _one_graph_max(self, n, rng) -> float:
        d = self._degrees(n, rng)
        src, pick = self._distinct_picks(n, d, rng)
        act = self._activity.sample(rng, n)
        agg = act + np.bincount(src, weights=act[pick], minlength=n)
        return float(agg.max())

    def sample_batch(self, n, count, rng):
        m = np.empty(count)
        for i in range(count):
            m[i] = self._one_graph_max(n, rng)
        return np.full(count, n, dtype=np.int64), m

    def sample_nu(self, n, count, rng):
        return np.full(count, n, dtype=np.int64)

    def sample_marginal(self, n, count, rng):
        # aggregate of one vertex: own activity + D iid picked activities;
        # picks land on distinct vertices, so their activities are iid
        d = np.minimum(rng.zipf(self.beta, count), n - 1)
        out = self._activity.sample(rng, count)
        total = int(d.sum())
        if total:
            picked = self._activity.sample(rng, total)
            starts = np.r_[0, np.cumsum(d)[:-1]]
            out += np.add.reduceat(picked, starts)
        return out

    def closed_form_u(self, n, s):
        # asymptotic tail calibration: n * (1 + EK) * (u/x_min)^(-a) = -ln s
        s = np.asarray(s, dtype=float)
        scale = (1.0 + self.mean_degree()) * n
        return self.x_min * (scale / (-np.log(s))) ** (1.0 / self.a)


# ---------------------------------------------------------------------------
# wrappers

class PowerTransform:
    """g(x) = x^p on [0, 1], strictly increasing for p > 0."""

    def __init__(self, p: float):
        if not p > 0:
            raise ConfigError(f"power must be positive, got {p}")
        self.p = float(p)
        self.name = f"power({self.p:g})"

    def apply(self, x):
        return np.asarray(x, dtype=float) ** self.p

    def invert(self, y):
        return np.asarray(y, dtype=float) ** (1.0 / self.p)


class MonotoneTransformSystem(SeriesSystem):
    """Applies a strictly increasing map to every series member.

    Maxima commute with monotone maps, so every summary of the base system
    transports through g draw by draw; this wrapper exists to test exactly
    that invariance.
    """

    def __init__(self, base: SeriesSystem, transform):
        if not isinstance(base, SeriesSystem):
            raise ConfigError(f"base must be a SeriesSystem, got {type(base).__name__}")
        lo, hi = base.u_domain
        if (lo, hi) != (0.0, 1.0) and isinstance(transform, PowerTransform):
            raise ConfigError("power transform needs a base with thresholds in (0, 1)")
        self.base = base
        self.transform = transform
        self.name = f"monotone_transform({base.name}, {transform.name})"

    @property
    def random_size(self):
        return self.base.random_size

    @property
    def has_exact_mean(self):
        return self.base.has_exact_mean

    @property
    def has_exact_max_cdf(self):
        return self.base.has_exact_max_cdf

    @property
    def calibration_kind(self):
        return self.base.calibration_kind

    @property
    def u_domain(self):
        return self.base.u_domain

    def validate_n(self, n):
        self.base.validate_n(n)

    def sample_batch(self, n, count, rng):
        nu, m = self.base.sample_batch(n, count, rng)
        return nu, self.transform.apply(m)

    def sample_nu(self, n, count, rng):
        return self.base.sample_nu(n, count, rng)

    def marginal_cdf(self, n, x):
        return self.base.marginal_cdf(n, self.transform.invert(x))

    def sample_marginal(self, n, count, rng):
        return self.transform.apply(self.base.sample_marginal(n, count, rng))

    def exact_mean_F_pow_nu(self, n, u, r=1.0):
        return self.base.exact_mean_F_pow_nu(n, self.transform.invert(u), r)

    def exact_max_cdf(self, n, u):
        return self.base.exact_max_cdf(n, self.transform.invert(u))

    def closed_form_u(self, n, s):
        u = self.base.closed_form_u(n, s)
        return None if u is None else self.transform.apply(u)


class SizeJitterSystem(SeriesSystem):
    """Randomizes a deterministic series size: nu = max(1, n + round(sqrt(n) Z)).

    nu/n -> 1 in probability, which must leave the limit curve untouched.
    The base must expose the conditional max inverse by size with a
    size-free uniform marginal.
    """

    calibration_kind = "nu_pool"

    def __init__(self, base: SeriesSystem):
        if not isinstance(base, (ExchangeableCopulaSystem, DuplicatedIidSystem)):
            raise ConfigError(
                "size jitter needs a deterministic-size base with a conditional "
                f"max inverse (exchangeable copula or duplicated iid), got {base!r}"
            )
        self.base = base
        self.name = f"size_jitter({base.name})"

    def validate_n(self, n):
        self.base.validate_n(n)

    def sample_nu(self, n, count, rng):
        z = rng.standard_normal(count)
        return np.maximum(1, n + np.rint(math.sqrt(n) * z)).astype(np.int64)

    def sample_batch(self, n, count, rng):
        nu = self.sample_nu(n, count, rng)
        v = rng.random(count)
        m = self.base.max_inverse_given_size(nu, v)
        return nu, m

    def marginal_cdf(self, n, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


# ---------------------------------------------------------------------------
# module operations

@dataclass
class MeanFPower:
    """E F_n(u)^(r nu_n): value, Monte Carlo stderr (0 when exact), exactness."""

    value: float
    stderr: float
    exact: bool


def sample_replicate(system: SeriesSystem, n: int, stream):
    """One exact draw of (nu_n, M_n)."""
    system.validate_n(n)
    nu, m = system.sample_batch(n, 1, stream.generator)
    return int(nu[0]), float(m[0])


def build_calibration_pool(system: SeriesSystem, n: int, stream, size: int = 200_000):
    """Frozen pool backing Monte Carlo calibration: nu draws or marginal draws."""
    kind = system.calibration_kind
    if kind == "exact":
        return None
    rng = stream.generator
    if kind == "nu_pool":
        return system.sample_nu(n, size, rng)
    if kind == "marginal_pool":
        return system.sample_marginal(n, size, rng)
    raise ConfigError(f"unknown calibration kind {kind!r}")


class Calibrator:
    """Vectorized evaluator of E F_n(u)^(r nu_n) at one stage n.

    Exact-mean systems evaluate in closed form; the rest go through one
    frozen pool (nu draws or marginal draws) built once and reused for
    every threshold, power, and bisection step, so root finding against a
    Monte Carlo functional is still deterministic bookkeeping.
    """

    def __init__(self, system: SeriesSystem, n: int, stream=None, pool=None,
                 pool_size: int = 200_000):
        system.validate_n(n)
        self.system = system
        self.n = n
        self.exact = system.has_exact_mean
        self.kind = system.calibration_kind
        if self.exact:
            self.pool = None
            return
        if pool is None:
            if stream is None:
                raise ConfigError(f"{system.name}: calibration needs a stream or a frozen pool")
            pool = build_calibration_pool(system, n, stream, pool_size)
        pool = np.asarray(pool)
        if self.kind == "marginal_pool":
            pool = np.sort(pool.astype(float))
        self.pool = pool

    def _edf(self, u):
        # empirical marginal d.f. from the sorted pool
        return np.searchsorted(self.pool, np.asarray(u, dtype=float), side="right") / self.pool.size

    def value(self, u, r: float = 1.0):
        if r < 0:
            raise ConfigError(f"power r must be non-negative, got {r}")
        u = np.asarray(u, dtype=float)
        if self.exact:
            return np.asarray(self.system.exact_mean_F_pow_nu(self.n, u, r), dtype=float)
        if self.kind == "marginal_pool":
            return self._edf(u) ** (r * self.n)
        f = np.asarray(self.system.marginal_cdf(self.n, u), dtype=float)
        return self._nu_pool_terms(f, r).mean(axis=0)

    def stderr_at(self, u, r: float = 1.0):
        u = np.asarray(u, dtype=float)
        if self.exact:
            return np.zeros_like(u)
        size = self.pool.size
        if self.kind == "marginal_pool":
            p = self._edf(u)
            se_p = np.sqrt(np.maximum(p * (1.0 - p), 0.0) / size)
            rn = r * self.n
            with np.errstate(divide="ignore", invalid="ignore"):
                out = rn * p ** (rn - 1.0) * se_p
            return np.where(p > 0.0, out, 0.0)
        f = np.asarray(self.system.marginal_cdf(self.n, u), dtype=float)
        y = self._nu_pool_terms(f, r)
        return y.std(axis=0, ddof=1) / math.sqrt(size)

    def _nu_pool_terms(self, f, r):
        # F^(r nu) with F = 0 or 1 handled away from log
        nu = self.pool.astype(float)[:, None]
        f = np.atleast_1d(f)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.exp(r * nu * np.log(f))
        y = np.where(f >= 1.0, 1.0, y)
        y = np.where((f <= 0.0) & (nu > 0), 0.0, y)
        y = np.where(nu == 0, 1.0, y)
        return y


def mean_F_pow_nu(system: SeriesSystem, n: int, u, r: float = 1.0,
                  stream=None, pool=None, pool_size: int = 200_000) -> MeanFPower:
    """The calibration functional E F_n(u)^(r nu_n) at a single threshold."""
    cal = Calibrator(system, n, stream=stream, pool=pool, pool_size=pool_size)
    value = float(cal.value([float(u)], r)[0])
    stderr = float(cal.stderr_at([float(u)], r)[0])
    return MeanFPower(value, stderr, cal.exact)


# ---------------------------------------------------------------------------
# configuration

_GEN_FAMILIES = {
    "independence": lambda p: IndependenceGenerator(),
    "clayton": lambda p: ClaytonGenerator(p["alpha"]),
    "frank": lambda p: FrankGenerator(p["alpha"]),
    "gumbel_hougaard": lambda p: GumbelHougaardGenerator(p["alpha"]),
}


def _build_generator(cfg: dict):
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    if family not in _GEN_FAMILIES:
        raise ConfigError(f"unknown generator family {family!r}; know {sorted(_GEN_FAMILIES)}")
    tilt = cfg.pop("tilt_gamma", None)
    allowed = {"alpha"} if family != "independence" else set()
    extra = set(cfg) - allowed
    if extra:
        raise ConfigError(f"unknown generator fields {sorted(extra)} for family {family!r}")
    missing = allowed - set(cfg)
    if missing:
        raise ConfigError(f"generator family {family!r} needs fields {sorted(missing)}")
    try:
        gen = _GEN_FAMILIES[family](cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if tilt is not None:
        gen = TiltedGenerator(gen, float(tilt))
    return gen


def _build_zeta(cfg: dict) -> Distribution:
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    try:
        if kind == "two_point":
            delta = float(cfg.pop("delta"))
            if not 0.0 < delta < 1.0:
                raise ConfigError(f"delta must lie in (0, 1), got {delta}")
            law = TwoPoint(1.0 - delta, 1.0 + delta, 0.5)
        elif kind == "pareto":
            a = float(cfg.pop("a"))
            if a <= 1.0:
                raise ConfigError(f"pareto threshold law needs a > 1, got {a}")
            law = Pareto(a, (a - 1.0) / a)  # x_min chosen so the mean is 1
        elif kind == "gamma":
            shape = float(cfg.pop("shape"))
            law = Gamma(shape, 1.0 / shape)
        elif kind == "degenerate":
            law = Degenerate(1.0)
        else:
            raise ConfigError(f"unknown threshold law {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"threshold law {kind!r} is missing field {exc}") from None
    if cfg:
        raise ConfigError(f"unknown threshold law fields {sorted(cfg)}")
    return law


def build_system(cfg: dict) -> SeriesSystem:
    """Construct a system from a plain configuration mapping (JSON-friendly)."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"system config must be a mapping, got {type(cfg).__name__}")
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    try:
        if kind == "exchangeable_copula":
            sys_ = ExchangeableCopulaSystem(_build_generator(cfg.pop("generator")))
        elif kind == "duplicated_iid":
            sys_ = DuplicatedIidSystem(int(cfg.pop("m")))
        elif kind == "mixture_spike":
            sys_ = MixtureSpikeSystem(float(cfg.pop("gamma")))
        elif kind == "geometric_threshold":
            eps = cfg.pop("eps", None)
            expo = cfg.pop("eps_exponent", None)
            sys_ = GeometricThresholdSystem(
                eps=None if eps is None else float(eps),
                eps_exponent=None if expo is None else float(expo),
            )
        elif kind == "random_threshold":
            sys_ = RandomThresholdSystem(_build_zeta(cfg.pop("law")))
        elif kind == "stable_size_gumbel":
            sys_ = StableSizeGumbelSystem(float(cfg.pop("beta")), float(cfg.pop("gamma")))
        elif kind == "branching_heredity":
            raw = cfg.pop("offspring")
            offspring = {int(k): float(v) for k, v in raw.items()}
            sys_ = BranchingHereditySystem(
                offspring,
                float(cfg.pop("gamma")),
                float(cfg.pop("a")),
                particle_budget=int(cfg.pop("particle_budget", 1_000_000)),
            )
        elif kind == "power_law_graph":
            sys_ = PowerLawGraphSystem(
                float(cfg.pop("beta")),
                float(cfg.pop("a", 1.0)),
                float(cfg.pop("x_min", 1.0)),
            )
        elif kind == "monotone_transform":
            base = build_system(cfg.pop("base"))
            sys_ = MonotoneTransformSystem(base, PowerTransform(float(cfg.pop("power"))))
        elif kind == "size_jitter":
            sys_ = SizeJitterSystem(build_system(cfg.pop("base")))
        else:
            raise ConfigError(f"unknown system kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"system kind {kind!r} is missing field {exc}") from None
    if cfg:
        raise ConfigError(f"unknown system fields {sorted(cfg)} for kind {kind!r}")
    return sys_
