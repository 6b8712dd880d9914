"""Monte Carlo engine for areas of random spindle hulls.

Replicate ``k`` at sample size ``n`` always draws from the substream
``(master_seed, kind, n, k)``; workers process fixed chunks of replicate
indices and the results are reduced in index order, so outputs do not
depend on the number of threads.  Sums use ``math.fsum``, which is exact
and therefore order independent.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy import stats as sps

from . import _kernels, rng as rngmod
from .bodies import ConvexBody, body_from_spec, expected_area_constant, require_spindle_regime, sample_uniform
from .config import config_hash
from .errors import ConfigError, DomainError, InvariantError
from .geom_core import DEDUPE_TOL, EPS_GEOM, _coords

ESTIMATORS = ("expectation", "variance", "clt", "diffops", "interaction")
CSV_COLUMNS = (
    "n", "m", "mean_area", "var_area", "stderr", "rescaled_mean", "d_w", "ks",
    "skew", "kurt", "b3", "b4", "p_interact", "seed", "config_hash",
)
ZERO_TOL_FACTOR = 1e-14
CHUNK = 256
BRUTE_FORCE_BELOW = 12
DEFAULT_BOOTSTRAP = 200


def default_threads() -> int:
    raw = os.environ.get("SPINDLELAB_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"SPINDLELAB_THREADS must be an integer, got {raw!r}") from None
        if value < 1:
            raise ConfigError("SPINDLELAB_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


# -- configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a Monte Carlo run."""

    body: dict
    r: float
    n_values: tuple[int, ...]
    replicates: int
    master_seed: int
    estimators: frozenset[str] = frozenset(ESTIMATORS)
    diffops_replicates: int | None = None
    bootstrap: int = DEFAULT_BOOTSTRAP
    body_model: ConvexBody = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "estimators", frozenset(self.estimators))
        object.__setattr__(self, "body_model", body_from_spec(self.body))
        if not self.n_values:
            raise ConfigError("n_values must not be empty")
        if any(n < 2 for n in self.n_values):
            raise ConfigError("every n must be at least 2")
        if self.replicates < 2:
            raise ConfigError("replicates must be at least 2")
        if self.diffops_replicates is not None and self.diffops_replicates < 2:
            raise ConfigError("diffops_replicates must be at least 2")
        if self.bootstrap < 0:
            raise ConfigError("bootstrap must be non-negative")
        unknown = self.estimators - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")
        try:
            rngmod.check_seed(self.master_seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        require_spindle_regime(self.body_model, self.r)

    @classmethod
    def from_mapping(cls, data: dict, seed: int | None = None) -> "ExperimentConfig":
        try:
            return cls(
                body=dict(data["body"]),
                r=float(data["r"]),
                n_values=tuple(data["n_values"]),
                replicates=int(data["replicates"]),
                master_seed=int(seed if seed is not None else data.get("master_seed", 0)),
                estimators=frozenset(data.get("estimators", ESTIMATORS)),
                diffops_replicates=data.get("diffops_replicates"),
                bootstrap=int(data.get("bootstrap", DEFAULT_BOOTSTRAP)),
            )
        except KeyError as exc:
            raise ConfigError(f"config is missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (ConfigError, DomainError)):
                raise
            raise ConfigError(f"bad config value: {exc}") from None

    def as_mapping(self) -> dict:
        out = {
            "body": dict(self.body),
            "r": self.r,
            "n_values": list(self.n_values),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "estimators": sorted(self.estimators),
            "bootstrap": self.bootstrap,
        }
        if self.diffops_replicates is not None:
            out["diffops_replicates"] = self.diffops_replicates
        return out

    @property
    def digest(self) -> str:
        return config_hash(self.as_mapping())

    @property
    def m_diffops(self) -> int:
        return self.diffops_replicates if self.diffops_replicates is not None else self.replicates


# -- summaries --------------------------------------------------------------------


def _mean(values) -> float:
    return math.fsum(values) / len(values)


def _unbiased_variance(values, mean: float) -> float:
    return math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)


@dataclass(frozen=True)
class SampleSummary:
    n: int
    m: int
    mean: float
    variance: float
    stderr_mean: float
    mean_vertex_count: float

    @classmethod
    def from_replicates(cls, n: int, areas: np.ndarray, counts: np.ndarray) -> "SampleSummary":
        m = len(areas)
        if m < 2:
            raise DomainError("at least two replicates are needed for a variance")
        vals = areas.tolist()
        mean = _mean(vals)
        var = _unbiased_variance(vals, mean)
        return cls(n, m, mean, var, math.sqrt(var / m), _mean(counts.tolist()))


@dataclass(frozen=True)
class StandardizedSample:
    """Replicates centred by their mean and scaled by their standard deviation."""

    n: int
    values: np.ndarray

    @classmethod
    def from_values(cls, n: int, values) -> "StandardizedSample":
        vals = np.asarray(values, float)
        if vals.size < 2 or not np.all(np.isfinite(vals)):
            raise DomainError("standardization needs at least two finite values")
        mean = _mean(vals.tolist())
        centred = vals - mean
        sd = math.sqrt(math.fsum((centred * centred).tolist()) / (vals.size - 1))
        if sd == 0:
            raise DomainError("cannot standardize a constant sample")
        z = centred / sd
        # one correction pass so the mean and variance hold to rounding level
        z = z - _mean(z.tolist())
        z = z / math.sqrt(math.fsum((z * z).tolist()) / (z.size - 1))
        return cls(n, z)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def fit_power_law(ns, values) -> ScalingFit:
    """OLS fit of ``log value = intercept + exponent * log n``."""
    x = np.log(np.asarray(ns, float))
    y = np.log(np.asarray(values, float))
    if x.size < 2 or np.ptp(x) == 0:
        raise DomainError("a scaling fit needs at least two distinct n values")
    if not np.all(np.isfinite(y)):
        raise DomainError("scaling fit needs positive finite values")
    res = sps.linregress(x, y)
    r2 = float(res.rvalue**2) if np.ptp(y) > 0 else 1.0
    return ScalingFit(float(res.slope), float(res.intercept), min(max(r2, 0.0), 1.0), tuple(zip(x.tolist(), y.tolist())))


# -- replicates -------------------------------------------------------------------


def simulate_once(body: ConvexBody, r: float, n: int, rng: np.random.Generator) -> tuple[float, int]:
    """Area and vertex count of the spindle hull of ``n`` uniform points."""
    pts = sample_uniform(body, rng, n)
    area, count = _kernels.hull_area_count(np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), r, EPS_GEOM)
    if count < 0:
        raise InvariantError(f"sampled points are not spindle representable at r={r}")
    return float(area), int(count)


def _map_chunks(task, m: int, threads: int) -> list:
    chunks = [(s, min(s + CHUNK, m)) for s in range(0, m, CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        return [task(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: task(*ab), chunks))


def area_replicates(body: ConvexBody, r: float, n: int, m: int, master_seed: int, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Areas and vertex counts of ``m`` independent replicates, in replicate order."""
    limit = body.area * (1.0 + 1e-12)

    def task(lo, hi):
        areas = np.empty(hi - lo)
        counts = np.empty(hi - lo, np.int64)
        for k in range(lo, hi):
            a, c = simulate_once(body, r, n, rngmod.replicate_stream(master_seed, n, k))
            if not 0.0 <= a <= limit:
                raise InvariantError(f"hull area {a} outside [0, A(K)] at n={n}, replicate {k}")
            areas[k - lo] = a
            counts[k - lo] = c
        return areas, counts

    parts = _map_chunks(task, m, threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@dataclass(frozen=True)
class ExpectationRow:
    summary: SampleSummary
    rescaled_mean: float
    rescaled_stderr: float
    constant: float


def rescale_missed_area(body: ConvexBody, summary: SampleSummary) -> tuple[float, float]:
    """``E[A(K \\ K_n^r)] n^(2/3)`` and its standard error."""
    scale = summary.n ** (2.0 / 3.0)
    return (body.area - summary.mean) * scale, summary.stderr_mean * scale


def run_expectation(cfg: ExperimentConfig, threads: int = 1) -> list[ExpectationRow]:
    body = cfg.body_model
    c = expected_area_constant(body, cfg.r)
    rows = []
    for n in cfg.n_values:
        areas, counts = area_replicates(body, cfg.r, n, cfg.replicates, cfg.master_seed, threads)
        s = SampleSummary.from_replicates(n, areas, counts)
        rows.append(ExpectationRow(s, *rescale_missed_area(body, s), c))
    return rows


def run_variance_scaling(cfg: ExperimentConfig, threads: int = 1) -> tuple[ScalingFit, list[SampleSummary]]:
    if len(set(cfg.n_values)) < 2:
        raise DomainError("variance scaling needs at least two distinct n values")
    summaries = []
    for n in cfg.n_values:
        areas, counts = area_replicates(cfg.body_model, cfg.r, n, cfg.replicates, cfg.master_seed, threads)
        summaries.append(SampleSummary.from_replicates(n, areas, counts))
    return fit_power_law([s.n for s in summaries], [s.variance for s in summaries]), summaries


# -- normality ----------------------------------------------------------------------


def _phi_antiderivative(x):
    # d/dx [x Phi(x) + phi(x)] = Phi(x)
    x = np.asarray(x, float)
    return x * special.ndtr(x) + np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def wasserstein_to_normal(sample) -> float:
    """``integral |F_m(x) - Phi(x)| dx`` evaluated exactly between order statistics."""
    values = sample.values if isinstance(sample, StandardizedSample) else sample
    x = np.sort(np.asarray(values, float))
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise DomainError("Wasserstein distance needs finite values")
    m = x.size
    G = _phi_antiderivative
    # tails: F = 0 left of x_1, F = 1 right of x_m
    total = [float(G(x[0])), float(G(-x[-1]))]
    a = x[:-1]
    b = x[1:]
    c = np.arange(1, m) / m
    q = special.ndtri(c)
    # integral of (c - Phi) over [a, b], split at Phi^-1(c) where the sign flips
    lo = np.minimum(np.maximum(q, a), b)
    left = (c * (lo - a) - (G(lo) - G(a)))
    right = ((G(b) - G(lo)) - c * (b - lo))
    total.extend(np.abs(left).tolist())
    total.extend(np.abs(right).tolist())
    return math.fsum(total)


@dataclass(frozen=True)
class NormalityReport:
    n: int
    m: int
    d_w: float
    ks: float
    skew: float
    kurt: float
    d_w_se: float
    ks_se: float
    skew_se: float
    kurt_se: float


def _shape_stats(z: np.ndarray) -> tuple[float, float, float, float]:
    zs = StandardizedSample.from_values(0, z).values
    return (
        wasserstein_to_normal(zs),
        float(sps.kstest(zs, "norm").statistic),
        float(sps.skew(zs)),
        float(sps.kurtosis(zs, fisher=True)),
    )


def normality_report(n: int, areas: np.ndarray, bootstrap: int, rng: np.random.Generator) -> NormalityReport:
    """Distance to normality of standardized areas, with bootstrap standard errors."""
    z = StandardizedSample.from_values(n, areas).values
    point = _shape_stats(z)
    if bootstrap >= 2:
        boots = np.array([_shape_stats(z[rng.integers(0, z.size, z.size)]) for _ in range(bootstrap)])
        se = boots.std(axis=0, ddof=1)
    else:
        se = np.full(4, np.nan)
    return NormalityReport(n, z.size, *point, *map(float, se))


def run_clt(cfg: ExperimentConfig, threads: int = 1, keep_samples: bool = False):
    """Per-n normality statistics; with ``keep_samples`` also the standardized samples."""
    reports = []
    samples = []
    for n in cfg.n_values:
        areas, _ = area_replicates(cfg.body_model, cfg.r, n, cfg.replicates, cfg.master_seed, threads)
        rng = rngmod.stream(cfg.master_seed, rngmod.STREAM_BOOTSTRAP, n)
        reports.append(normality_report(n, areas, cfg.bootstrap, rng))
        if keep_samples:
            samples.append(StandardizedSample.from_values(n, areas))
    return (reports, samples) if keep_samples else reports


# -- difference operators --------------------------------------------------------


def _hull_area(xs: np.ndarray, ys: np.ndarray, r: float) -> float:
    if xs.size == 0:
        return 0.0
    area, count = _kernels.hull_area_count(xs, ys, r, EPS_GEOM)
    if count < 0:
        raise InvariantError("points are not spindle representable")
    return float(area)


def _check_index(i: int, n: int):
    if not 0 <= i < n:
        raise IndexError(f"point index {i} out of range for {n} points")


def first_difference(points, i: int, r: float) -> float:
    """``A(x) - A(x without point i)`` for the spindle hull area ``A``."""
    xs, ys = _coords(points)
    _check_index(i, xs.size)
    keep = np.arange(xs.size) != i
    return _hull_area(xs, ys, r) - _hull_area(xs[keep], ys[keep], r)


def second_difference(points, i: int, j: int, r: float) -> float:
    """``D_i D_j A``: inclusion-exclusion over removing points i and j."""
    xs, ys = _coords(points)
    n = xs.size
    _check_index(i, n)
    _check_index(j, n)
    if i == j:
        raise IndexError("second differences need two distinct indices")
    if n < 3:
        raise DomainError("second differences need at least three points")
    idx = np.arange(n)
    a_i = _hull_area(xs[idx != i], ys[idx != i], r)
    a_j = _hull_area(xs[idx != j], ys[idx != j], r)
    both = (idx != i) & (idx != j)
    # pairwise sums in a fixed order keep the result symmetric in (i, j)
    return (_hull_area(xs, ys, r) + _hull_area(xs[both], ys[both], r)) - (a_i + a_j)


def difference_replicate(body: ConvexBody, r: float, n: int, rng: np.random.Generator) -> tuple[float, np.ndarray, int]:
    """One replicate: hull area, ``sum_i |D_i A|^p`` for p = 1..4, and interacting pair count."""
    pts = sample_uniform(body, rng, n)
    xs = np.ascontiguousarray(pts[:, 0])
    ys = np.ascontiguousarray(pts[:, 1])
    area, _, s, pairs = _kernels.difference_stats(
        xs, ys, r, EPS_GEOM, ZERO_TOL_FACTOR * body.area, n < BRUTE_FORCE_BELOW
    )
    return float(area), s, int(pairs)


@dataclass(frozen=True)
class DifferenceMoments:
    """Moments of first differences and interaction frequency at one n."""

    n: int
    m: int
    b3: float
    b3_se: float
    b4: float
    b4_se: float
    var_area: float
    p_interact: float
    p_interact_se: float

    @property
    def b3_normalized(self) -> float:
        return self.b3 / self.var_area**1.5

    @property
    def b4_normalized(self) -> float:
        return self.b4 / self.var_area**2

    @property
    def n_b3(self) -> float:
        return self.n * self.b3_normalized

    @property
    def sqrt_n_b4(self) -> float:
        return math.sqrt(self.n * self.b4_normalized)


def difference_moments(body: ConvexBody, r: float, n: int, m: int, master_seed: int, threads: int = 1) -> DifferenceMoments:
    """Estimate ``E|D_1 A|^3``, ``E|D_1 A|^4`` and ``P(D_{1,2} A != 0)`` from m replicates.

    By exchangeability each replicate contributes the average over all n
    points (resp. all pairs), which is an unbiased per-replicate estimate.
    """
    pairs_total = n * (n - 1) / 2

    def task(lo, hi):
        out = np.empty((hi - lo, 4))
        for k in range(lo, hi):
            area, s, pairs = difference_replicate(body, r, n, rngmod.replicate_stream(master_seed, n, k, rngmod.STREAM_DIFFOPS))
            out[k - lo] = (area, s[2] / n, s[3] / n, pairs / pairs_total)
        return out

    data = np.concatenate(_map_chunks(task, m, threads))

    def mean_se(col):
        vals = data[:, col].tolist()
        mu = _mean(vals)
        return mu, math.sqrt(_unbiased_variance(vals, mu) / m)

    area_mean = _mean(data[:, 0].tolist())
    var_area = _unbiased_variance(data[:, 0].tolist(), area_mean)
    return DifferenceMoments(n, m, *mean_se(1), *mean_se(2), var_area, *mean_se(3))


def estimate_B34(body: ConvexBody, r: float, n: int, m: int, master_seed: int, threads: int = 1) -> DifferenceMoments:
    require_spindle_regime(body, r)
    return difference_moments(body, r, n, m, master_seed, threads)


def interaction_probability(body: ConvexBody, r: float, n: int, m: int, master_seed: int, threads: int = 1) -> tuple[float, float]:
    if n < 2:
        raise DomainError("interaction needs at least two points")
    d = estimate_B34(body, r, n, m, master_seed, threads)
    return d.p_interact, d.p_interact_se


@dataclass(frozen=True)
class NormalBoundReport:
    rows: tuple[DifferenceMoments, ...]
    n_b3_fit: ScalingFit | None
    sqrt_n_b4_fit: ScalingFit | None

    def as_records(self) -> list[dict]:
        return [
            {
                "n": d.n,
                "b1": "not estimated",
                "b2": "not estimated",
                "n_b3": d.n_b3,
                "sqrt_n_b4": d.sqrt_n_b4,
                "p_interact": d.p_interact,
            }
            for d in self.rows
        ]


def normal_bound_report(cfg: ExperimentConfig, threads: int = 1) -> NormalBoundReport:
    rows = tuple(difference_moments(cfg.body_model, cfg.r, n, cfg.m_diffops, cfg.master_seed, threads) for n in cfg.n_values)
    fits = (None, None)
    if len(set(cfg.n_values)) >= 2:
        fits = (
            fit_power_law([d.n for d in rows], [d.n_b3 for d in rows]),
            fit_power_law([d.n for d in rows], [d.sqrt_n_b4 for d in rows]),
        )
    return NormalBoundReport(rows, *fits)


# -- full experiment ---------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple[dict, ...]
    variance_fit: ScalingFit | None
    clt: tuple[NormalityReport, ...]
    samples: tuple[StandardizedSample, ...]
    diffops: tuple[DifferenceMoments, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            buf.write(",".join(row.get(c, "") if c == "config_hash" else _fmt(row.get(c)) for c in CSV_COLUMNS) + "\n")
        return buf.getvalue()

    def samples_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,replicate,value,seed,config_hash\n")
        for s in self.samples:
            for k, v in enumerate(s.values.tolist()):
                buf.write(f"{s.n},{k},{v!r},{self.config.master_seed},{self.config.digest}\n")
        return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, threads: int = 1, keep_samples: bool = False) -> ExperimentResult:
    """Run every requested estimator, one CSV row per n."""
    body = cfg.body_model
    est = cfg.estimators
    c = expected_area_constant(body, cfg.r) if "expectation" in est else None
    rows = []
    summaries = []
    clt = []
    samples = []
    diffops = []
    need_areas = est & {"expectation", "variance", "clt"}
    for n in cfg.n_values:
        row = {"n": n, "m": cfg.replicates, "seed": cfg.master_seed, "config_hash": cfg.digest}
        if need_areas:
            areas, counts = area_replicates(body, cfg.r, n, cfg.replicates, cfg.master_seed, threads)
            s = SampleSummary.from_replicates(n, areas, counts)
            summaries.append(s)
            row.update(mean_area=s.mean, var_area=s.variance, stderr=s.stderr_mean)
            if c is not None:
                row["rescaled_mean"] = rescale_missed_area(body, s)[0]
            if "clt" in est:
                rep = normality_report(n, areas, cfg.bootstrap, rngmod.stream(cfg.master_seed, rngmod.STREAM_BOOTSTRAP, n))
                clt.append(rep)
                row.update(d_w=rep.d_w, ks=rep.ks, skew=rep.skew, kurt=rep.kurt)
                if keep_samples:
                    samples.append(StandardizedSample.from_values(n, areas))
        if est & {"diffops", "interaction"}:
            d = difference_moments(body, cfg.r, n, cfg.m_diffops, cfg.master_seed, threads)
            diffops.append(d)
            if "diffops" in est:
                row.update(b3=d.b3, b4=d.b4)
            if "interaction" in est:
                row["p_interact"] = d.p_interact
        rows.append(row)
    fit = None
    if "variance" in est and len(set(cfg.n_values)) >= 2:
        fit = fit_power_law([s.n for s in summaries], [s.variance for s in summaries])
    return ExperimentResult(cfg, tuple(rows), fit, tuple(clt), tuple(samples), tuple(diffops))
