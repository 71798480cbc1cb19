"""Synthetic curve-marked point patterns with controllable spatial dependence.

Patterns are homogeneous Poisson in a rectangular window.  Each point carries a
closed curve built from a trigonometric radial function (six basis
coefficients), then rotated and rescaled.  The three mark components --
coefficients, rotation angle, scale -- are sampled from spatial fields that are
either distance-correlated (exponential-covariance Gaussian fields over the
point locations) or spatially independent, toggled per component.  Marginal
laws match between the two regimes so that only the spatial dependence
structure changes: angles stay uniform on the circle and scales uniform on the
configured interval.

``run_study`` sweeps dependence scenarios, runs the full estimation and
envelope-test pipeline per replicate, and aggregates global p-values and
pointwise deviation proportions per scenario and symmetry group.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv, ndtr

from .curves import Curve, to_srv
from .envelopes import envelope_test
from .errors import InvalidInputError, NumericalError
from .pointprocess import DEFAULT_CORRECTION, MarkedPattern, Window, default_r_grid
from .registration import SymmetryGroup

log = logging.getLogger(__name__)

ALL_SCENARIOS = ("000", "100", "010", "001", "110", "101", "011", "111")

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)

# per-field tags for deriving independent RNG streams from one seed
_FIELD_POINTS = 0
_FIELD_SHAPE = 1
_FIELD_ORIENTATION = 2
_FIELD_SCALE = 3


@dataclass(frozen=True)
class MaternParams:
    scale: float = 0.5
    smoothness: float = 0.5
    range: float = 2.0

    def __post_init__(self):
        if min(self.scale, self.smoothness, self.range) <= 0.0:
            raise InvalidInputError("covariance parameters must be positive")


@dataclass(frozen=True)
class IndepShapeCov:
    """Spatially flat coefficient covariance diag * I + common * J."""

    diag: float = 0.1
    common: float = 0.9

    def __post_init__(self):
        if self.diag <= 0.0 or self.common < 0.0:
            raise InvalidInputError("independent-shape covariance needs diag > 0, common >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    window: Window = field(default_factory=lambda: Window(0.0, 4.0, 0.0, 4.0))
    intensity: float = 8.0
    dep_shape: bool = False
    dep_orientation: bool = False
    dep_size: bool = False
    matern: MaternParams = field(default_factory=MaternParams)
    indep_shape_cov: IndepShapeCov = field(default_factory=IndepShapeCov)
    scale_interval: tuple[float, float] = (0.2, 1.2)
    grid_size: int = 100
    seed: int | tuple[int, ...] = 0

    def __post_init__(self):
        if self.intensity <= 0.0:
            raise InvalidInputError("intensity must be positive")
        lo, hi = self.scale_interval
        if not lo < hi:
            raise InvalidInputError("scale_interval must be ordered")

    @property
    def scenario_code(self) -> str:
        return "".join(str(int(b)) for b in (self.dep_shape, self.dep_orientation, self.dep_size))


def config_for_scenario(base: ScenarioConfig, code: str) -> ScenarioConfig:
    """Copy of a config with the dependence toggles set from a 3-bit code
    (shape, orientation, size)."""
    if len(code) != 3 or any(c not in "01" for c in code):
        raise InvalidInputError(f"scenario code must be three 0/1 digits, got {code!r}")
    return replace(base, dep_shape=code[0] == "1", dep_orientation=code[1] == "1",
                   dep_size=code[2] == "1")


def _seed_list(seed) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(v) for v in seed]


def sample_poisson(window: Window, intensity: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson point sample: Poisson count, uniform locations."""
    if intensity <= 0.0:
        raise InvalidInputError("intensity must be positive")
    n = rng.poisson(intensity * window.area)
    xs = rng.uniform(window.xmin, window.xmax, size=n)
    ys = rng.uniform(window.ymin, window.ymax, size=n)
    return np.column_stack([xs, ys])


def matern_cov(locations: np.ndarray, params: MaternParams) -> np.ndarray:
    """Matern covariance matrix over point locations, diagonal equal to the
    scale parameter (variance convention).  Smoothness 1/2 reduces to
    scale * exp(-d / range)."""
    pts = np.asarray(locations, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    nu = params.smoothness
    if nu == 0.5:
        return params.scale * np.exp(-d / params.range)
    u = d / params.range
    with np.errstate(invalid="ignore"):
        cov = params.scale * (2.0 ** (1.0 - nu) / gamma_fn(nu)) * u**nu * kv(nu, u)
    cov[d == 0.0] = params.scale
    return cov


def sample_gaussian_field(cov: np.ndarray, mean, rng: np.random.Generator) -> np.ndarray:
    """Gaussian field sample mean + L z with L a Cholesky factor of cov.

    The factorization retries with escalating diagonal jitter; failure after
    the largest jitter raises a numerical error.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (n,))
    z = rng.standard_normal(n)
    for jitter in _JITTERS:
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            continue
        return mean + chol @ z
    raise NumericalError("covariance factorization failed after jitter escalation")


def fourier_shape(coeffs, grid_size: int = 100) -> Curve:
    """Closed curve from six radial-basis coefficients.

    The radial function c1 + c2*0 + c3*cos(t) + c4*sin(t) + c5*cos(2t) + c6*sin(2t)
    is evaluated on the uniform grid over [-pi, pi) and shifted by
    |min| + |max| so it is strictly positive; the curve is the polar graph of
    the shifted function and therefore star-shaped and simple.  The identically
    zero second basis function is kept so coefficient indices stay aligned with
    the (cos lt, sin lt), l = 0, 1, 2 basis.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (6,):
        raise InvalidInputError(f"expected 6 coefficients, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InvalidInputError("coefficients must be finite")
    t = -np.pi + 2.0 * np.pi * np.arange(grid_size) / grid_size
    radial = (c[0]
              + c[2] * np.cos(t) + c[3] * np.sin(t)
              + c[4] * np.cos(2.0 * t) + c[5] * np.sin(2.0 * t))
    adjusted = radial + abs(radial.min()) + abs(radial.max())
    if not np.all(adjusted > 0.0):
        raise InvalidInputError("radial function is identically zero; no curve")
    return Curve(np.column_stack([adjusted * np.cos(t), adjusted * np.sin(t)]))


def _shape_covariance(locations: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    n = locations.shape[0]
    if config.dep_shape:
        return matern_cov(locations, config.matern)
    c = config.indep_shape_cov
    return c.diag * np.eye(n) + c.common * np.ones((n, n))


def sample_marks(locations: np.ndarray, config: ScenarioConfig, seed=None) -> list[Curve]:
    """One curve mark per location, with per-component spatial dependence.

    Coefficients: six independent Gaussian fields over the locations, each with
    the exponential covariance when dependent or the flat diag*I + common*J
    covariance when not.  Angles: the pointwise direction of two independent
    Gaussian fields when dependent (uniform marginal on the circle), iid
    uniform otherwise.  Scales: a Gaussian field pushed through its own
    marginal CDF onto the scale interval, so the marginal stays uniform in both
    regimes.  Each component consumes its own RNG stream derived from
    (seed, component), so toggling one dependence flag leaves the other
    components' draws bitwise unchanged.
    """
    locations = np.asarray(locations, dtype=float)
    if locations.shape[0] < 1:
        raise InvalidInputError("need at least one location")
    n = locations.shape[0]
    key = _seed_list(config.seed if seed is None else seed)

    rng_shape = np.random.default_rng(key + [_FIELD_SHAPE])
    cov_shape = _shape_covariance(locations, config)
    coeffs = np.column_stack(
        [sample_gaussian_field(cov_shape, 0.0, rng_shape) for _ in range(6)]
    )

    rng_orient = np.random.default_rng(key + [_FIELD_ORIENTATION])
    if config.dep_orientation:
        cov = matern_cov(locations, config.matern)
        u = sample_gaussian_field(cov, 0.0, rng_orient)
        v = sample_gaussian_field(cov, 0.0, rng_orient)
        phi = np.arctan2(v, u)
    else:
        phi = rng_orient.uniform(0.0, 2.0 * np.pi, size=n)

    rng_scale = np.random.default_rng(key + [_FIELD_SCALE])
    if config.dep_size:
        cov = matern_cov(locations, config.matern)
    else:
        cov = np.eye(n)
    z = sample_gaussian_field(cov, 1.0, rng_scale)
    lo, hi = config.scale_interval
    sigma = lo + (hi - lo) * ndtr((z - 1.0) / np.sqrt(np.diag(cov)))

    marks = []
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    for i in range(n):
        base = fourier_shape(coeffs[i], config.grid_size).points
        x, y = base[:, 0], base[:, 1]
        rotated = np.column_stack([x * cos_phi[i] - y * sin_phi[i],
                                   x * sin_phi[i] + y * cos_phi[i]])
        marks.append(Curve(sigma[i] * rotated))
    return marks


def generate_pattern(config: ScenarioConfig, seed=None) -> MarkedPattern:
    """Complete marked pattern: Poisson locations plus SRV-transformed marks.

    Deterministic given the seed; draws with fewer than two points are
    regenerated from a fresh stream (and logged), since second-order analysis
    needs at least two.
    """
    key = _seed_list(config.seed if seed is None else seed)
    locations = None
    for attempt in range(100):
        rng = np.random.default_rng(key + [_FIELD_POINTS, attempt])
        pts = sample_poisson(config.window, config.intensity, rng)
        if pts.shape[0] >= 2:
            locations = pts
            break
        log.info("pattern draw %d produced %d points; regenerating", attempt, pts.shape[0])
    if locations is None:
        raise NumericalError("could not draw a pattern with at least 2 points")
    curves = sample_marks(locations, config, seed=key)
    marks = [to_srv(c) for c in curves]
    return MarkedPattern(window=config.window, locations=locations, marks=marks,
                         mark_curves=curves)


# ---------------------------------------------------------------------------
# scenario study

DEFAULT_GROUPS = (SymmetryGroup.SHAPE, SymmetryGroup.ORIENTATION_SHAPE,
                  SymmetryGroup.SIZE_SHAPE)


@dataclass
class StudySpec:
    """Everything one replicate task needs; picklable for worker processes."""

    config: ScenarioConfig
    scenario: str
    replicate: int
    master_seed: int
    s: int
    alpha: float
    groups: tuple[SymmetryGroup, ...]
    r_max: float | None
    r_steps: int
    correction: str


def _scenario_index(code: str) -> int:
    return int(code, 2)


def run_replicate(spec: StudySpec) -> dict:
    """Generate one pattern and run the envelope test for every group."""
    gen_key = (spec.master_seed, _scenario_index(spec.scenario), spec.replicate)
    config = replace(config_for_scenario(spec.config, spec.scenario), seed=gen_key)
    pattern = generate_pattern(config)
    r_grid = default_r_grid(pattern.window, r_max=spec.r_max, r_steps=spec.r_steps)
    out = {"scenario": spec.scenario, "replicate": spec.replicate,
           "n_points": pattern.n_points, "groups": {}}
    for gi, group in enumerate(spec.groups):
        result = envelope_test(pattern, group, r_grid=r_grid, s=spec.s,
                               seed=gen_key + (gi, 7), alpha=spec.alpha,
                               correction=spec.correction)
        out["groups"][group.value] = {
            "erl_p": result.erl_p,
            "deviation_proportion": result.deviation_proportion,
        }
    return out


def run_study(scenarios, replicates: int, s: int, seed: int,
              config: ScenarioConfig | None = None, alpha: float = 0.05,
              groups=DEFAULT_GROUPS, r_max: float | None = None, r_steps: int = 50,
              correction: str = DEFAULT_CORRECTION, threads: int | None = None) -> list[dict]:
    """Scenario sweep: mean (sd) global p-value and deviation proportion per
    scenario and group, aggregated over replicates.

    Replicates are independent tasks with seeds derived from
    (seed, scenario, replicate); per-replicate failures are logged and excluded
    with a count, and the aggregate does not depend on scheduling order.
    """
    if replicates < 2:
        raise InvalidInputError("a study needs at least 2 replicates")
    if isinstance(scenarios, str):
        scenarios = ALL_SCENARIOS if scenarios == "all" else (scenarios,)
    base = config if config is not None else ScenarioConfig()
    groups = tuple(SymmetryGroup(g) for g in groups)
    specs = [
        StudySpec(config=base, scenario=code, replicate=rep, master_seed=seed,
                  s=s, alpha=alpha, groups=groups, r_max=r_max, r_steps=r_steps,
                  correction=correction)
        for code in scenarios
        for rep in range(replicates)
    ]

    results: list[dict] = []
    failures: dict[str, int] = {code: 0 for code in scenarios}
    if threads is not None and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_safe_replicate, specs))
    else:
        outcomes = [_safe_replicate(spec) for spec in specs]
    for spec, outcome in zip(specs, outcomes):
        if outcome is None:
            failures[spec.scenario] += 1
        else:
            results.append(outcome)

    rows = []
    for code in scenarios:
        row = {"scenario": code,
               "dep_shape": int(code[0]), "dep_orientation": int(code[1]),
               "dep_size": int(code[2]),
               "replicates": sum(1 for r in results if r["scenario"] == code),
               "failures": failures[code]}
        for group in groups:
            ps = [r["groups"][group.value]["erl_p"] for r in results
                  if r["scenario"] == code]
            props = [r["groups"][group.value]["deviation_proportion"] for r in results
                     if r["scenario"] == code]
            tag = group.value.replace("-", "_")
            row[f"p_{tag}_mean"] = float(np.mean(ps)) if ps else math.nan
            row[f"p_{tag}_sd"] = float(np.std(ps, ddof=1)) if len(ps) > 1 else math.nan
            row[f"prop_{tag}_mean"] = float(np.mean(props)) if props else math.nan
            row[f"prop_{tag}_sd"] = float(np.std(props, ddof=1)) if len(props) > 1 else math.nan
        rows.append(row)
    return rows


def _safe_replicate(spec: StudySpec) -> dict | None:
    try:
        return run_replicate(spec)
    except Exception:  # noqa: BLE001 -- study aggregates must survive bad replicates
        log.exception("replicate %s/%d failed; excluding", spec.scenario, spec.replicate)
        return None
