"""FastAPI application wrapping the analysis library.

Every endpoint is a stateless wrapper: payloads are converted to library
types, the corresponding library routine runs, and the result is serialized
back.  The CLI drives these same endpoints, in process by default.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..curves import Curve, SrvCurve, from_srv, resample_closed, to_srv
from ..envelopes import EnvelopeResult, envelope_test
from ..errors import InvalidInputError, NumericalError, ShapeMarksError
from ..fileio import dedupe_vertices
from ..karcher import karcher_mean
from ..pointprocess import (
    GROUND,
    MarkedPattern,
    Window,
    default_r_grid,
    ground_k,
    mark_weighted_k,
)
from ..registration import Alignment, SymmetryGroup, geodesic, align, aligned_representative
from ..simulate import (
    ALL_SCENARIOS,
    IndepShapeCov,
    MaternParams,
    ScenarioConfig,
    generate_pattern,
    run_study,
)
from . import models


def _curve_from_payload(points, grid_size: int) -> SrvCurve:
    deduped = dedupe_vertices([list(map(float, p)) for p in points])
    curve = Curve(np.asarray(deduped))
    return to_srv(resample_closed(curve, grid_size))


def _window_from_payload(window) -> Window:
    xmin, xmax, ymin, ymax = (float(v) for v in window)
    return Window(xmin, xmax, ymin, ymax)


def _pattern_from_payload(pattern: models.PatternModel, grid_size: int) -> MarkedPattern:
    window = _window_from_payload(pattern.window)
    locations = np.array([[p.x, p.y] for p in pattern.points])
    mark_curves = []
    marks = []
    for p in pattern.points:
        deduped = dedupe_vertices([list(map(float, v)) for v in p.curve])
        curve = resample_closed(Curve(np.asarray(deduped)), grid_size)
        mark_curves.append(curve)
        marks.append(to_srv(curve))
    return MarkedPattern(window=window, locations=locations, marks=marks,
                         mark_curves=mark_curves)


def _alignment_payload(a: Alignment) -> models.AlignmentModel:
    return models.AlignmentModel(theta=a.theta, seed=a.seed,
                                 gamma=[float(v) for v in a.gamma_radians()],
                                 applied_scale=a.applied_scale)


def _curve_payload(curve: Curve) -> list[tuple[float, float]]:
    return [(float(x), float(y)) for x, y in curve.points]


def _pattern_payload(pattern: MarkedPattern) -> models.PatternModel:
    if pattern.mark_curves is not None:
        curves = pattern.mark_curves
    else:
        curves = [from_srv(q) for q in pattern.marks]
    w = pattern.window
    return models.PatternModel(
        window=(w.xmin, w.xmax, w.ymin, w.ymax),
        points=[
            models.PatternPointModel(x=float(x), y=float(y), curve=_curve_payload(c))
            for (x, y), c in zip(pattern.locations, curves)
        ],
    )


def _order_statistic_band(samples: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    s = samples.shape[0]
    k = max(int(math.floor(alpha / 2.0 * (s + 1))), 1)
    ordered = np.sort(samples, axis=0)
    return ordered[k - 1], ordered[s - k]


def _envelope_payload(result: EnvelopeResult, include_permuted: bool) -> models.EnvelopeResponse:
    k_lo, k_hi = _order_statistic_band(result.k_permuted, result.alpha)
    return models.EnvelopeResponse(
        r_grid=result.r_grid.tolist(),
        t_observed=result.t_observed.tolist(),
        l_h0=result.l_h0.tolist(),
        k_observed=result.k_observed.tolist(),
        pointwise_lo=result.pointwise_lo.tolist(),
        pointwise_hi=result.pointwise_hi.tolist(),
        k_pointwise_lo=k_lo.tolist(),
        k_pointwise_hi=k_hi.tolist(),
        deviation_proportion=result.deviation_proportion,
        erl_p=result.erl_p,
        s=result.s,
        seed=result.seed if isinstance(result.seed, int) else list(result.seed),
        alpha=result.alpha,
        group=result.group,
        correction=result.correction,
        c_f=result.c_f,
        bandwidth=result.bandwidth,
        t_permuted=result.t_permuted.tolist() if include_permuted else None,
    )


def _config_from_payload(model: models.ScenarioConfigModel) -> ScenarioConfig:
    seed = model.seed if isinstance(model.seed, int) else tuple(model.seed)
    return ScenarioConfig(
        window=_window_from_payload(model.window),
        intensity=model.intensity,
        dep_shape=model.dep_shape,
        dep_orientation=model.dep_orientation,
        dep_size=model.dep_size,
        matern=MaternParams(scale=model.matern.scale, smoothness=model.matern.smoothness,
                            range=model.matern.range),
        indep_shape_cov=IndepShapeCov(diag=model.indep_shape_cov.diag,
                                      common=model.indep_shape_cov.common),
        scale_interval=model.scale_interval,
        grid_size=model.grid_size,
        seed=seed,
    )


def _sanitize_row(row: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in row.items()}


def create_app() -> FastAPI:
    app = FastAPI(title="shapemarks", version=__version__,
                  description="Spatial correlation analysis for curve-marked point patterns")

    @app.exception_handler(ShapeMarksError)
    async def _domain_error(request: Request, exc: ShapeMarksError):
        kind = "numeric" if isinstance(exc, NumericalError) else "input"
        status = 500 if kind == "numeric" else 400
        return JSONResponse(status_code=status,
                            content={"detail": str(exc), "error_kind": kind})

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/distance", response_model=models.DistanceResponse)
    def distance(req: models.DistanceRequest):
        q1 = _curve_from_payload(req.curve_a, req.grid_size)
        q2 = _curve_from_payload(req.curve_b, req.grid_size)
        alignment, dist = align(q1, q2, SymmetryGroup(req.group))
        return models.DistanceResponse(distance=dist, group=req.group,
                                       grid_size=req.grid_size,
                                       alignment=_alignment_payload(alignment))

    @app.post("/geodesic", response_model=models.GeodesicResponse)
    def geodesic_path(req: models.GeodesicRequest):
        q1 = _curve_from_payload(req.curve_a, req.grid_size)
        q2 = _curve_from_payload(req.curve_b, req.grid_size)
        _, dist = align(q1, q2, SymmetryGroup(req.group))
        path = geodesic(q1, q2, SymmetryGroup(req.group), req.steps)
        return models.GeodesicResponse(distance=dist, group=req.group,
                                       curves=[_curve_payload(c) for c in path])

    @app.post("/mean", response_model=models.MeanResponse)
    def mean(req: models.MeanRequest):
        srvs = [_curve_from_payload(c, req.grid_size) for c in req.curves]
        result = karcher_mean(srvs, SymmetryGroup(req.group))
        return models.MeanResponse(
            mean_curve=_curve_payload(from_srv(result.mean)),
            mean_srv=[(float(x), float(y)) for x, y in result.mean.values],
            dispersion=result.dispersion,
            group=req.group,
            objective_trace=[float(v) for v in result.objective_trace],
            alignments=[_alignment_payload(a) for a in result.alignments],
            aligned_curves=[_curve_payload(from_srv(q)) for q in result.aligned],
        )

    @app.post("/estimate-k", response_model=models.KEstimateResponse)
    def estimate_k(req: models.EstimateKRequest):
        pattern = _pattern_from_payload(req.pattern, req.grid_size)
        r_grid = default_r_grid(pattern.window, r_max=req.r_max, r_steps=req.r_steps)
        if req.group == GROUND:
            est = ground_k(pattern, r_grid=r_grid, correction=req.correction,
                           bandwidth=req.bandwidth)
        else:
            est = mark_weighted_k(pattern, SymmetryGroup(req.group), r_grid=r_grid,
                                  correction=req.correction, bandwidth=req.bandwidth)
        return models.KEstimateResponse(r=est.r_grid.tolist(), k=est.k_values.tolist(),
                                        l=est.l_values.tolist(), c_f=est.c_f,
                                        bandwidth=est.bandwidth, group=est.group,
                                        correction=est.correction)

    @app.post("/envelope-test", response_model=models.EnvelopeResponse)
    def envelope(req: models.EnvelopeRequest):
        pattern = _pattern_from_payload(req.pattern, req.grid_size)
        r_grid = default_r_grid(pattern.window, r_max=req.r_max, r_steps=req.r_steps)
        seed = req.seed if isinstance(req.seed, int) else tuple(req.seed)
        result = envelope_test(pattern, SymmetryGroup(req.group), r_grid=r_grid,
                               s=req.s, seed=seed, alpha=req.alpha,
                               correction=req.correction, bandwidth=req.bandwidth)
        return _envelope_payload(result, req.include_permuted)

    @app.post("/simulate/pattern", response_model=models.PatternModel)
    def simulate_pattern(req: models.SimulatePatternRequest):
        pattern = generate_pattern(_config_from_payload(req.config))
        return _pattern_payload(pattern)

    @app.post("/simulate/study", response_model=models.StudyResponse)
    def simulate_study(req: models.StudyRequest):
        scenarios = req.scenarios if req.scenarios != "all" else ALL_SCENARIOS
        if isinstance(scenarios, (list, tuple)):
            for code in scenarios:
                if len(code) != 3 or any(c not in "01" for c in code):
                    raise InvalidInputError(f"bad scenario code {code!r}")
        groups = req.groups if req.groups else None
        rows = run_study(scenarios, replicates=req.replicates, s=req.s, seed=req.seed,
                         config=_config_from_payload(req.config), alpha=req.alpha,
                         groups=[SymmetryGroup(g) for g in groups] if groups else
                         (SymmetryGroup.SHAPE, SymmetryGroup.ORIENTATION_SHAPE,
                          SymmetryGroup.SIZE_SHAPE),
                         r_max=req.r_max, r_steps=req.r_steps,
                         correction=req.correction, threads=req.threads)
        return models.StudyResponse(rows=[_sanitize_row(r) for r in rows])

    return app
