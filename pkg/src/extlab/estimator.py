"""Monte Carlo estimation of the limit curve and the indices read off it.

psi_hat(s) is the fraction of replicates whose maximum sits at or below the
calibrated threshold u_n(s), evaluated on one shared set of replicates for
the whole grid (common random numbers keep the curve monotone up to noise).

Replicates are drawn in a fixed layout of 64 batches, batch j on substream
(REPLICATE_TAG, j), and reduced in batch order with integer counts, so the
result is byte-identical no matter how many worker processes execute the
batches.  The calibration pool and the Definition-2 comparand pool live on
their own substreams, independent of the replicates.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .normalizer import NormalizingCurve, solve_curve
from .sampling import RandomStream
from .systems import Calibrator, ConfigError, SeriesSystem

__all__ = [
    "PsiEstimate",
    "Def2Fit",
    "IndexReport",
    "estimate_psi",
    "partial_indices",
    "tail_indices",
    "mean_log_slope",
    "def2_fit",
    "isotonic_fit",
    "index_report",
]

_BATCHES = 64
# substream purpose tags: replicates, calibration pool, comparand pool
_REPLICATE_TAG = 1
_POOL_TAG = 2
_DEF2_TAG = 3

DEFAULT_GRID = np.round(np.linspace(0.05, 0.95, 19), 10)


@dataclass
class PsiEstimate:
    """Empirical limit curve on an s grid at one stage n."""

    system_name: str
    n: int
    replicates: int
    s: np.ndarray
    u: np.ndarray
    psi_hat: np.ndarray
    stderr: np.ndarray
    curve: NormalizingCurve
    batch_counts: np.ndarray = field(repr=False)   # (64, len(s)) int64
    batch_sizes: np.ndarray = field(repr=False)    # (64,) int64
    maxima: np.ndarray | None = field(default=None, repr=False)


def _replicate_batch(args):
    system, n, u, seed, parent_id, j, size, keep = args
    rng = RandomStream(seed, parent_id).substream(_REPLICATE_TAG, j).generator
    _, m = system.sample_batch(n, size, rng)
    counts = np.searchsorted(np.sort(m), u, side="right").astype(np.int64)
    return counts, (m if keep else None)


def estimate_psi(system: SeriesSystem, n: int, s_grid=None, replicates: int = 100_000,
                 stream: RandomStream | None = None, workers: int = 0,
                 pool_size: int = 200_000, keep_maxima: bool = False,
                 curve: NormalizingCurve | None = None) -> PsiEstimate:
    """Estimate the limit curve: solve thresholds, then count threshold hits."""
    if stream is None:
        raise ConfigError("estimate_psi needs a RandomStream")
    if not isinstance(replicates, (int, np.integer)) or replicates < _BATCHES:
        raise ConfigError(f"replicates must be an integer >= {_BATCHES}, got {replicates!r}")
    s = None if s_grid is None else np.atleast_1d(np.asarray(s_grid, dtype=float))
    if curve is None:
        if s is None:
            s = DEFAULT_GRID.copy()
        curve = solve_curve(system, n, s, stream=stream.substream(_POOL_TAG), pool_size=pool_size)
    elif s is None:
        s = np.asarray(curve.s, dtype=float)
    elif s.size != np.asarray(curve.s).size or not np.allclose(s, curve.s, atol=1e-12):
        raise ConfigError("s_grid disagrees with the supplied curve's grid")
    u = np.asarray(curve.u, dtype=float)

    sizes = np.full(_BATCHES, replicates // _BATCHES, dtype=np.int64)
    sizes[: replicates % _BATCHES] += 1
    jobs = [
        (system, n, u, stream.seed, stream.stream_id, j, int(sizes[j]), keep_maxima)
        for j in range(_BATCHES)
        if sizes[j] > 0
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as ex:
            results = list(ex.map(_replicate_batch, jobs))
    else:
        results = [_replicate_batch(job) for job in jobs]

    batch_counts = np.zeros((_BATCHES, s.size), dtype=np.int64)
    for row, (counts, _) in enumerate(results):
        batch_counts[row] = counts
    total = batch_counts.sum(axis=0)
    psi_hat = total / float(replicates)
    stderr = np.sqrt(psi_hat * (1.0 - psi_hat) / replicates)
    maxima = None
    if keep_maxima:
        maxima = np.concatenate([m for _, m in results])
    return PsiEstimate(
        system_name=system.name, n=int(n), replicates=int(replicates),
        s=s, u=u, psi_hat=psi_hat, stderr=stderr, curve=curve,
        batch_counts=batch_counts, batch_sizes=sizes, maxima=maxima,
    )


# ---------------------------------------------------------------------------
# index extraction

def _log_slopes(est: PsiEstimate) -> np.ndarray:
    """log_s psi_hat(s) per grid point; +inf where psi_hat = 0."""
    with np.errstate(divide="ignore"):
        return np.log(est.psi_hat) / np.log(est.s)


def partial_indices(est: PsiEstimate) -> tuple[float, float]:
    """(theta_minus_hat, theta_plus_hat): grid extrema of log_s psi_hat."""
    slopes = _log_slopes(est)
    return float(np.min(slopes)), float(np.max(slopes))


def tail_indices(est: PsiEstimate) -> tuple[float, float]:
    """(theta0_hat, theta1_hat): the slope at the smallest and largest grid s."""
    slopes = _log_slopes(est)
    order = np.argsort(est.s)
    return float(slopes[order[0]]), float(slopes[order[-1]])


def mean_log_slope(est: PsiEstimate) -> tuple[float, float]:
    """Grid mean of log_s psi_hat with a batch-means standard error.

    The 64 replicate batches are iid, so the spread of per-batch grid means
    gives a correlation-honest error bar for the overall grid mean.
    """
    slopes = _log_slopes(est)
    mean = float(np.mean(slopes))
    sizes = est.batch_sizes.astype(float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        batch_psi = est.batch_counts / sizes
        batch_mean = np.mean(np.log(batch_psi) / np.log(est.s)[None, :], axis=1)
    good = np.isfinite(batch_mean)
    if good.sum() >= 2:
        se = float(batch_mean[good].std(ddof=1) / math.sqrt(good.sum()))
    else:
        se = math.nan
    return mean, se


def isotonic_fit(y) -> np.ndarray:
    """Nondecreasing least-squares projection (pool adjacent violators)."""
    y = np.asarray(y, dtype=float)
    vals: list[float] = []
    wts: list[int] = []
    for v in y:
        vals.append(float(v))
        wts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            w = wts[-2] + wts[-1]
            vals[-2] = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / w
            wts[-2] = w
            vals.pop()
            wts.pop()
    return np.repeat(vals, wts)


# ---------------------------------------------------------------------------
# Definition-2 matching

@dataclass
class Def2Fit:
    """Best theta matching psi_hat against E F(u)^(theta nu)."""

    theta: float
    discrepancy: float
    bounds: tuple[float, float]
    estimate: PsiEstimate
    calibrator: Calibrator = field(repr=False)

    def discrepancy_at(self, theta: float) -> float:
        vals = self.calibrator.value(self.estimate.u, float(theta))
        return float(np.max(np.abs(self.estimate.psi_hat - vals)))


def def2_fit(system: SeriesSystem, n: int, s_grid=None, replicates: int = 100_000,
             stream: RandomStream | None = None, workers: int = 0,
             pool_size: int = 200_000, estimate: PsiEstimate | None = None,
             theta_bounds: tuple[float, float] = (0.01, 10.0)) -> Def2Fit:
    """Minimize the sup-norm gap D(theta) = max_s |psi_hat - E F(u)^(theta nu)|.

    The comparand pool is frozen on its own substream, independent of both
    the replicates and the threshold-calibration pool.  A coarse geometric
    scan brackets the minimum before golden-section refinement, so a flat
    or gently multimodal D does not trap the fit.
    """
    if stream is None:
        raise ConfigError("def2_fit needs a RandomStream")
    lo, hi = float(theta_bounds[0]), float(theta_bounds[1])
    if not 0.0 < lo < hi:
        raise ConfigError(f"need 0 < lo < hi in theta bounds, got {theta_bounds}")
    if estimate is None:
        estimate = estimate_psi(system, n, s_grid=s_grid, replicates=replicates,
                                stream=stream, workers=workers, pool_size=pool_size)
    cal = Calibrator(system, n, stream=stream.substream(_DEF2_TAG), pool_size=pool_size)
    psi, u = estimate.psi_hat, estimate.u

    def dis(theta: float) -> float:
        return float(np.max(np.abs(psi - cal.value(u, theta))))

    thetas = np.geomspace(lo, hi, 65)
    coarse = np.array([dis(t) for t in thetas])
    i = int(np.argmin(coarse))
    a, b = thetas[max(i - 1, 0)], thetas[min(i + 1, len(thetas) - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = dis(c), dis(d)
    for _ in range(200):
        if b - a < 1e-6 * max(1.0, b):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = dis(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = dis(d)
    theta = 0.5 * (a + b)
    return Def2Fit(float(theta), dis(float(theta)), (lo, hi), estimate, cal)


# ---------------------------------------------------------------------------
# report

@dataclass
class IndexReport:
    """All index summaries extracted from one estimated curve."""

    theta_minus: float
    theta_plus: float
    theta0: float
    theta1: float
    grid_mean_slope: float
    grid_mean_slope_se: float
    isotonic_violation: float
    theta_def2: float | None = None
    def2_discrepancy: float | None = None

    def as_dict(self) -> dict:
        return {
            "theta_minus": self.theta_minus,
            "theta_plus": self.theta_plus,
            "theta0": self.theta0,
            "theta1": self.theta1,
            "grid_mean_slope": self.grid_mean_slope,
            "grid_mean_slope_se": self.grid_mean_slope_se,
            "isotonic_violation": self.isotonic_violation,
            "theta_def2": self.theta_def2,
            "def2_discrepancy": self.def2_discrepancy,
        }


def index_report(est: PsiEstimate, def2: Def2Fit | None = None) -> IndexReport:
    tm, tp = partial_indices(est)
    t0, t1 = tail_indices(est)
    gm, gse = mean_log_slope(est)
    order = np.argsort(est.s)
    violation = float(np.max(np.abs(est.psi_hat[order] - isotonic_fit(est.psi_hat[order]))))
    return IndexReport(
        theta_minus=tm, theta_plus=tp, theta0=t0, theta1=t1,
        grid_mean_slope=gm, grid_mean_slope_se=gse,
        isotonic_violation=violation,
        theta_def2=None if def2 is None else def2.theta,
        def2_discrepancy=None if def2 is None else def2.discrepancy,
    )
