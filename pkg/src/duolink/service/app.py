"""FastAPI service wrapping the replay/analysis core.

Run with ``duolink serve`` or ``uvicorn duolink.service.app:app``. The
service is a local analysis daemon: trace and output paths in requests
refer to the service host's filesystem.

Error contract: failed requests carry ``{"detail": {"code": ...,
"message": ...}}`` with code ``parse_error`` (HTTP 400),
``validation_error`` (HTTP 422), or ``io_error`` (HTTP 500).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import ValidationError as PydanticValidationError

from .. import __version__
from ..airtime import DeferralSpec
from ..chanmodel import RNG_ALGORITHM, gen_trace
from ..config import RunConfig
from ..errors import ParseError, ValidationError
from ..metrics import cdf as compute_cdf
from ..metrics import percentile, summarize
from ..policy import PolicyMode, PolicyOutcomes, resolve_deferral_us, run_policy
from ..report import (
    report_json_payload,
    stats_dict,
    write_cdf_csv,
    write_report_csv,
    write_report_json,
)
from ..sweep import DEFAULT_T_D_GRID_US, SweepSpec, run_sweep, write_sweep_csv
from ..trace import PairedTrace, align_pairs, latency_correlation, read_log_file, write_log_file
from .schemas import (
    CdfRequest,
    CdfResponse,
    ChannelGenStats,
    EvalRequest,
    EvalResponse,
    GenRequest,
    GenResponse,
    HealthResponse,
    ModeRow,
    SweepRequest,
    SweepResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="duolink", version=__version__)

    @app.exception_handler(ParseError)
    async def _parse_error(request: Request, exc: ParseError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"code": "parse_error", "message": str(exc)}},
        )

    @app.exception_handler(ValidationError)
    async def _validation_error(request: Request, exc: ValidationError):
        return JSONResponse(
            status_code=422,
            content={"detail": {"code": "validation_error", "message": str(exc)}},
        )

    @app.exception_handler(PydanticValidationError)
    async def _pydantic_error(request: Request, exc: PydanticValidationError):
        return JSONResponse(
            status_code=422,
            content={"detail": {"code": "validation_error", "message": str(exc)}},
        )

    @app.exception_handler(OSError)
    async def _io_error(request: Request, exc: OSError):
        return JSONResponse(
            status_code=500,
            content={"detail": {"code": "io_error", "message": str(exc)}},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/gen", response_model=GenResponse)
    def gen(req: GenRequest) -> GenResponse:
        config = req.config
        if req.seed is not None:
            config = config.model_copy(update={"seed": req.seed})
        dcf = config.dcf_params()
        channels = []
        for channel_id, ge, out in (
            ("A", config.channel_a, req.out_a),
            ("B", config.channel_b, req.out_b),
        ):
            seed = config.seed_for_channel(channel_id)
            trace = gen_trace(
                req.n,
                config.period_us,
                config.start_ts_us,
                dcf,
                ge,
                seed,
                channel_id=channel_id,
            )
            write_log_file(trace, out)
            delivered = int(trace.delivered.sum())
            channels.append(
                ChannelGenStats(
                    channel_id=channel_id,
                    seed=seed,
                    n=len(trace),
                    delivered=delivered,
                    lost=len(trace) - delivered,
                    mean_attempts=float(trace.attempts.mean()) if len(trace) else None,
                )
            )
        return GenResponse(
            out_a=req.out_a,
            out_b=req.out_b,
            rng_algorithm=RNG_ALGORITHM,
            channels=channels,
            config_hash=config.config_hash(),
        )

    @app.post("/eval", response_model=EvalResponse)
    def eval_modes(req: EvalRequest) -> EvalResponse:
        config = req.config
        paired = _load_paired(req, config)
        modes = _parse_modes(req.modes)
        t_d = _resolve_t_d(req.t_d_us, config)
        results = [(mode, _run(paired, mode, t_d, config)) for mode in modes]
        rows = [(mode, summarize(out)) for mode, out in results]
        try:
            r_ab = latency_correlation(paired)
        except ValidationError:
            r_ab = None

        files: list[str] = []
        if req.out:
            meta = {
                "config_hash": config.config_hash(),
                "seed": config.seed,
                "t_d_us": t_d,
                "tolerance_us": paired.meta["tolerance_us"],
                "n_pairs": len(paired),
                "dropped_a": paired.meta["dropped_a"],
                "dropped_b": paired.meta["dropped_b"],
                "pearson_r": r_ab,
                "trace_a": req.trace_a,
                "trace_b": req.trace_b,
                "heuristic_seed": config.heuristic.seed,
            }
            csv_path = f"{req.out}.report.csv"
            json_path = f"{req.out}.report.json"
            payload = report_json_payload(rows, meta)
            for mode, out in results:
                lats = out.delivered_latencies()
                payload["modes"][mode.value]["percentiles"] = {
                    str(q): int(percentile(lats, q)) if len(lats) else None
                    for q in config.percentiles
                }
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                write_report_csv(rows, fh)
            with open(json_path, "w", encoding="utf-8", newline="") as fh:
                write_report_json(payload, fh)
            files += [csv_path, json_path]
            for mode, out in results:
                path = f"{req.out}.cdf.{mode.code}.csv"
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    write_cdf_csv(compute_cdf(out), fh)
                files.append(path)

        return EvalResponse(
            rows=[_mode_row(mode, stats, t_d) for mode, stats in rows],
            t_d_us=t_d,
            n_pairs=len(paired),
            dropped_a=paired.meta["dropped_a"],
            dropped_b=paired.meta["dropped_b"],
            pearson_r=r_ab,
            config_hash=config.config_hash(),
            files=files,
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        config = req.config
        paired = _load_paired(req, config)
        modes = _parse_modes(req.modes)
        grid = tuple(req.grid) if req.grid else DEFAULT_T_D_GRID_US
        spec = SweepSpec(
            t_d_grid_us=grid,
            modes=tuple(modes),
            trace_ref=req.trace_a,
            output_ref=req.out,
        )
        rows = run_sweep(
            spec,
            paired,
            hcfg=config.heuristic_resolved() if PolicyMode.HEURISTIC in modes else None,
            d_min_primary_us=config.min_latency_us(),
        )
        with open(req.out, "w", encoding="utf-8", newline="") as fh:
            write_sweep_csv(rows, fh)
        return SweepResponse(
            rows=[_mode_row(r.mode, r.stats, r.t_d_us) for r in rows],
            n_pairs=len(paired),
            out=req.out,
            config_hash=config.config_hash(),
        )

    @app.post("/cdf", response_model=CdfResponse)
    def cdf_endpoint(req: CdfRequest) -> CdfResponse:
        config = req.config
        paired = _load_paired(req, config)
        mode = PolicyMode.parse(req.mode)
        t_d = _resolve_t_d(req.t_d_us, config)
        out = _run(paired, mode, t_d, config)
        curve = compute_cdf(out)
        with open(req.out, "w", encoding="utf-8", newline="") as fh:
            write_cdf_csv(curve, fh)
        return CdfResponse(
            mode=mode.value,
            t_d_us=t_d if mode.is_deferred else None,
            n_points=len(curve.latencies),
            n_pairs=len(paired),
            delivery_ratio=curve.n_delivered / curve.n_total,
            out=req.out,
            config_hash=config.config_hash(),
        )

    return app


def _parse_modes(names: list[str] | None) -> list[PolicyMode]:
    if not names:
        return list(PolicyMode)
    return [PolicyMode.parse(name) for name in names]


def _resolve_t_d(t_d_us: int | None, config: RunConfig) -> int:
    if t_d_us is not None:
        return t_d_us
    return resolve_deferral_us(config.deferral, config.min_latency_us())


def _load_paired(req, config: RunConfig) -> PairedTrace:
    a = read_log_file(req.trace_a, channel_id="A")
    b = read_log_file(req.trace_b, channel_id="B")
    tolerance = req.tolerance_us if req.tolerance_us is not None else config.tolerance_us
    return align_pairs(a, b, tolerance, max_pairs=req.max_pairs)


def _run(paired: PairedTrace, mode: PolicyMode, t_d: int, config: RunConfig) -> PolicyOutcomes:
    deferral = DeferralSpec(mode="fixed", fixed_us=t_d) if mode.is_deferred else None
    hcfg = config.heuristic_resolved() if mode is PolicyMode.HEURISTIC else None
    return run_policy(
        paired, mode, deferral, hcfg, d_min_primary_us=config.min_latency_us()
    )


def _mode_row(mode: PolicyMode, stats, t_d_us: int | None) -> ModeRow:
    payload = stats_dict(stats)
    payload.pop("n_delivered")
    return ModeRow(
        mode=mode.value,
        t_d_us=t_d_us if mode.is_deferred else None,
        **payload,
    )


app = create_app()
