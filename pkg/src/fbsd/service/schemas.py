"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class CostReportResponse(BaseModel):
    params_total: int
    params_mapping: int
    params_core: int
    macs_per_frame: int
    macs_per_frame_core: int
    macs_per_second: float
    macs_per_second_core: float
    frames_per_second: float
    text: str


class InitWeightsRequest(BaseModel):
    seed: int = 0


class UtteranceScores(BaseModel):
    name: str
    si_sdr: float
    sd_sdr: float
    stoi: float


class AggregateScores(BaseModel):
    utterances: int
    si_sdr: float
    sd_sdr: float
    stoi: float


class EvalResponse(BaseModel):
    utterances: list[UtteranceScores]
    aggregate: AggregateScores
    jsonl: str
    table: str


class BenchResponse(BaseModel):
    passes: int
    warmup: int
    include_dsp: bool
    step_ms_with_mapping: float | None = None
    step_ms_without_mapping: float | None = None
    rtf_with_mapping: float | None = None
    rtf_without_mapping: float | None = None
    hop: int
    sample_rate: int
    threads: str
    text: str


class ErrorResponse(BaseModel):
    detail: str
    error: str = Field(description="exception class name")
