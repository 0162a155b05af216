"""HTTP service exposing the denoising engine and its pipeline.

All heavy lifting stays in the core package; handlers validate uploads,
call into it and stream results back. Audio and weight payloads travel as
file uploads so the service needs no shared filesystem with its clients.
"""

from __future__ import annotations

import io
import zipfile

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response

from .. import __version__
from ..bench import format_bench_report, run_bench
from ..config import SAMPLE_RATE, ModelConfig
from ..costs import cost_report, format_cost_report
from ..dsp import AudioBuffer
from ..errors import AudioFormatError, FbsdError, InvalidArgumentError
from ..metrics import EvalReport, evaluate
from ..mixing import SEGMENT_SECONDS, fit_length, mix_signals, sample_mix_params, segment_samples
from ..model import ActivationTrace, StreamingDenoiser
from ..pipeline import denoise_audio
from ..wavio import read_wav_bytes, write_wav_bytes
from ..weights_io import load_bytes, random_init, save_bytes
from .schemas import (
    BenchResponse,
    CostReportResponse,
    EvalResponse,
    HealthResponse,
    InitWeightsRequest,
)

app = FastAPI(title="fbsd", version=__version__)


@app.exception_handler(FbsdError)
async def fbsd_error_handler(_: Request, exc: FbsdError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"detail": str(exc), "error": type(exc).__name__},
    )


async def _load_audio(upload: UploadFile, expect_rate: int | None = SAMPLE_RATE) -> AudioBuffer:
    audio = read_wav_bytes(await upload.read())
    if expect_rate is not None and audio.sample_rate != expect_rate:
        raise AudioFormatError(
            f"{upload.filename or 'upload'}: expected {expect_rate} Hz, "
            f"got {audio.sample_rate} Hz"
        )
    return audio


async def _load_weights(upload: UploadFile):
    return load_bytes(await upload.read())


def _wav_response(audio: AudioBuffer, headers: dict[str, str] | None = None) -> Response:
    return Response(
        content=write_wav_bytes(audio, "float32"),
        media_type="audio/wav",
        headers=headers or {},
    )


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(version=__version__)


@app.get("/config")
def default_config() -> dict:
    return ModelConfig().to_dict()


@app.post("/info", response_model=CostReportResponse)
async def info(weights: UploadFile | None = File(default=None)) -> CostReportResponse:
    config = (await _load_weights(weights)).config if weights is not None else ModelConfig()
    report = cost_report(config)
    return CostReportResponse(**report.to_dict(), text=format_cost_report(report))


@app.post("/weights/init")
def weights_init(req: InitWeightsRequest) -> Response:
    data = save_bytes(random_init(ModelConfig(), seed=req.seed))
    return Response(
        content=data,
        media_type="application/octet-stream",
        headers={"Content-Disposition": f'attachment; filename="fbsd-seed{req.seed}.fbsd"'},
    )


@app.post("/denoise")
async def denoise(
    audio: UploadFile = File(...),
    weights: UploadFile = File(...),
) -> Response:
    buf = await _load_audio(audio)
    engine = StreamingDenoiser(await _load_weights(weights))
    out, frames, wall = denoise_audio(engine, buf)
    return _wav_response(out, headers={
        "X-Fbsd-Frames": str(frames),
        "X-Fbsd-Wall-Seconds": f"{wall:.6f}",
    })


@app.post("/mix")
async def mix_endpoint(
    clean: UploadFile = File(...),
    noise: list[UploadFile] = File(...),
    snr_db: int | None = Form(default=None),
    peak: float | None = Form(default=None),
    seed: int = Form(default=0),
    segment_seconds: float | None = Form(default=None),
) -> Response:
    if not 1 <= len(noise) <= 2:
        raise InvalidArgumentError("between one and two noise files are required")
    clean_buf = await _load_audio(clean)
    noise_bufs = [await _load_audio(n) for n in noise]
    rng = np.random.default_rng(seed)
    sampled_snr, sampled_peak = sample_mix_params(rng)
    snr_val = sampled_snr if snr_db is None else int(snr_db)
    peak_val = sampled_peak if peak is None else float(peak)
    from ..mixing import MixSpec  # validation of ranges

    MixSpec(clean="-", noises=["-"] * len(noise_bufs), snr_db=snr_val, peak=peak_val)
    fitted = [fit_length(n.samples, len(clean_buf.samples), rng) for n in noise_bufs]
    mixture, _, _ = mix_signals(clean_buf.samples, fitted, snr_val, peak_val)
    headers = {"X-Fbsd-Snr-Db": str(snr_val), "X-Fbsd-Peak": f"{peak_val:.6f}"}
    if segment_seconds is None:
        return _wav_response(AudioBuffer(mixture, SAMPLE_RATE), headers)
    seg_len = int(round(segment_seconds * SAMPLE_RATE))
    segments = segment_samples(mixture, seg_len)
    zbuf = io.BytesIO()
    with zipfile.ZipFile(zbuf, "w") as zf:
        for i, seg in enumerate(segments):
            zf.writestr(
                f"segment_{i:03d}.wav",
                write_wav_bytes(AudioBuffer(seg, SAMPLE_RATE), "float32"),
            )
    headers["X-Fbsd-Segments"] = str(len(segments))
    return Response(content=zbuf.getvalue(), media_type="application/zip", headers=headers)


@app.post("/eval", response_model=EvalResponse)
async def eval_endpoint(
    clean: UploadFile = File(...),
    processed: UploadFile = File(...),
) -> EvalResponse:
    ref = await _load_audio(clean)
    est = await _load_audio(processed)
    name = processed.filename or "utterance"
    report = EvalReport(utterances=[evaluate(ref, est, name=name)])
    agg = report.aggregate()
    return EvalResponse(
        utterances=[u.capped() for u in report.utterances],
        aggregate=agg,
        jsonl=report.to_jsonl(),
        table=report.summary_table(),
    )


@app.post("/bench", response_model=BenchResponse)
async def bench_endpoint(
    weights: UploadFile = File(...),
    passes: int = Form(default=100),
    include_dsp: bool = Form(default=False),
    no_mapping: bool = Form(default=False),
) -> BenchResponse:
    w = await _load_weights(weights)
    report = run_bench(
        w, passes=passes, include_dsp=include_dsp,
        measure_mapping=not no_mapping, measure_core=True,
    )
    return BenchResponse(**report.to_dict(), text=format_bench_report(report))


@app.post("/trace")
async def trace_endpoint(
    weights: UploadFile = File(...),
    frames: UploadFile = File(...),
) -> Response:
    w = await _load_weights(weights)
    try:
        mags = np.load(io.BytesIO(await frames.read()))
    except ValueError as exc:
        raise InvalidArgumentError(f"frames upload is not a .npy file: {exc}") from exc
    engine = StreamingDenoiser(w)
    trace = ActivationTrace()
    engine.process_offline(np.asarray(mags, dtype=np.float32), trace=trace)
    buf = io.BytesIO()
    trace.save(buf, np.asarray(mags, dtype=np.float32))
    return Response(content=buf.getvalue(), media_type="application/octet-stream")
