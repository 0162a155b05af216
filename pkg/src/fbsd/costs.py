"""Analytical cost model: parameter counts and per-frame MACs.

MACs count the multiply-accumulates of the linear layers (convolutions,
affine maps, GRU matrix products) for one streaming step. Normalizations,
nonlinearities, windowing and the FFT are excluded: the accounting covers
the DNN, with the input/output mapping split out so the model core can be
compared with and without it.

Headline "MACs (G)" figures for models of this size are conventionally
quoted per inference; both the per-frame and the derived per-second
numbers are reported since the convention is ambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .config import HOP, SAMPLE_RATE, ModelConfig
from .weights_io import weight_layout

_MAPPING_PREFIXES = ("map_in.", "map_out.")


@dataclass(frozen=True)
class CostReport:
    params_total: int
    params_mapping: int          # Map_in + Map_out (incl. Map_in norm affines)
    params_core: int             # everything else
    macs_per_frame: int          # full model, one streaming step
    macs_per_frame_core: int     # without the input/output mapping
    macs_per_second: float
    macs_per_second_core: float
    frames_per_second: float

    def to_dict(self) -> dict:
        return asdict(self)


def count_params(config: ModelConfig) -> tuple[int, int, int]:
    """(total, mapping, core) learnable scalar counts."""
    total = mapping = 0
    for name, spec in weight_layout(config).items():
        n = 1
        for s in spec.shape:
            n *= s
        total += n
        if name.startswith(_MAPPING_PREFIXES):
            mapping += n
    return total, mapping, total - mapping


def macs_breakdown(config: ModelConfig) -> dict[str, int]:
    """Per-layer multiply-accumulate counts for one streaming step.

    A pointwise conv of C_in -> C_out over F features contributes
    C_in * C_out * F; a depthwise conv K taps over C channels and F output
    features contributes C * K * F; a transposed conv scatters K taps from
    each of its F input features.
    """
    c = config
    out: dict[str, int] = {
        "map_in.fc": c.n_bins * c.n_features,
        # entry 2D conv: one output time step x F' features
        "encoder.entry.conv": c.entry_channels * (c.lookback + 1)
        * c.entry_freq_kernel * c.n_features,
    }
    feats = c.encoder_features
    for i, (k, c_in, c_out) in enumerate(
        zip(c.kernels, c.encoder_in_channels, c.block_channels), start=1
    ):
        f_in, f_out = feats[i - 1], feats[i]
        out[f"encoder.block{i}.expand"] = c_in * c.expand_channels * f_in
        out[f"encoder.block{i}.depthwise"] = c.expand_channels * k * f_out
        out[f"encoder.block{i}.project"] = c.expand_channels * c_out * f_out
    f_enc, c_last = feats[-1], c.block_channels[-1]
    out["bottleneck.reduce"] = f_enc * 1 * c_last
    out["bottleneck.gru"] = 3 * (c_last * c.gru_hidden + c.gru_hidden * c.gru_hidden)
    out["bottleneck.expand"] = 1 * f_enc * c.gru_hidden
    d = c.decoder_channels
    dec_feats = c.decoder_features
    for i, (k, c_skip) in enumerate(zip(c.decoder_kernels, c.skip_channels), start=1):
        c_prev = c_last if i == 1 else d
        out[f"decoder.block{i}.fuse"] = (c_prev + c_skip) * d * dec_feats[i - 1]
        out[f"decoder.block{i}.tconv"] = d * d * k * dec_feats[i - 1]
    out["decoder.collapse"] = d * 1 * c.n_features
    h = c.ae_hidden
    out["ae.fc_in"] = c.n_features * h
    out["ae.gru"] = 3 * (h * h + h * h)
    out["ae.fc_out"] = h * c.n_features
    out["mask.conv"] = c.n_features * 2 * (c.mask_lookback + 1) * c.mask_freq_kernel
    out["map_out.fc"] = c.n_features * c.n_bins
    return out


def count_macs(config: ModelConfig) -> tuple[int, int]:
    """(full, core) multiply-accumulates for one streaming step."""
    breakdown = macs_breakdown(config)
    full = sum(breakdown.values())
    mapping = sum(v for k, v in breakdown.items() if k.startswith(_MAPPING_PREFIXES))
    return full, full - mapping


def cost_report(
    config: ModelConfig,
    sample_rate: int = SAMPLE_RATE,
    hop: int = HOP,
) -> CostReport:
    total, mapping, core_params = count_params(config)
    macs_full, macs_core = count_macs(config)
    fps = sample_rate / hop
    return CostReport(
        params_total=total,
        params_mapping=mapping,
        params_core=core_params,
        macs_per_frame=macs_full,
        macs_per_frame_core=macs_core,
        macs_per_second=macs_full * fps,
        macs_per_second_core=macs_core * fps,
        frames_per_second=fps,
    )


def format_cost_report(report: CostReport) -> str:
    lines = [
        f"parameters total:    {report.params_total:>12,}  ({report.params_total / 1e6:.3f} M)",
        f"parameters mapping:  {report.params_mapping:>12,}  ({report.params_mapping / 1e6:.3f} M)",
        f"parameters core:     {report.params_core:>12,}  ({report.params_core / 1e6:.3f} M)",
        f"MACs per frame:      {report.macs_per_frame:>12,}  ({report.macs_per_frame / 1e9:.4f} G)",
        f"  without mapping:   {report.macs_per_frame_core:>12,}  ({report.macs_per_frame_core / 1e9:.4f} G)",
        f"MACs per second:     {report.macs_per_second:>14,.0f}  ({report.macs_per_second / 1e9:.4f} G/s"
        f" at {report.frames_per_second:.3f} frames/s)",
        f"  without mapping:   {report.macs_per_second_core:>14,.0f}  ({report.macs_per_second_core / 1e9:.4f} G/s)",
    ]
    return "\n".join(lines)
