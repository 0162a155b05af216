"""The causal streaming denoiser: one magnitude frame in, one mask out.

Seven stages per step: input mapping to a reduced feature space, a
look-back 2D entry conv plus inverted-bottleneck encoder, a GRU
bottleneck, a skip-connected transposed-conv decoder, a recurrent
autoencoder, a short-look-back mask head, and the output mapping back to
STFT bins through a sigmoid. All look-back state (history buffers, GRU
hidden vectors, the overlap-add tail) lives in :class:`StreamState`;
weights are immutable and shareable across streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig
from .dsp import OlaState, SpectralFrame, WindowSpec, apply_mask
from .errors import InvalidArgumentError
from .kernels import (
    ConvParams,
    GruParams,
    affine,
    causal_instance_norm,
    conv1d,
    conv2d,
    conv_transpose1d,
    gru_step,
    hard_swish,
    same_pad,
    sigmoid,
)
from .weights_io import ModelWeights


@dataclass
class StreamState:
    """All mutable per-stream state; zeroed at stream start.

    ``map_in_hist`` holds the lookback+1 most recent input-mapping outputs
    (oldest first, current frame last); its final mask_lookback+1 rows
    double as the mask head's short history. ``ae_hist`` holds the
    mask_lookback most recent autoencoder outputs (previous frames only).
    """

    map_in_hist: np.ndarray
    ae_hist: np.ndarray
    bottleneck_hidden: np.ndarray
    ae_hidden: np.ndarray
    ola: OlaState

    @classmethod
    def zeros(cls, config: ModelConfig, window: WindowSpec | None = None) -> "StreamState":
        window = window or WindowSpec()
        return cls(
            map_in_hist=np.zeros((config.lookback + 1, config.n_features), np.float32),
            ae_hist=np.zeros((config.mask_lookback, config.n_features), np.float32),
            bottleneck_hidden=np.zeros(config.gru_hidden, np.float32),
            ae_hidden=np.zeros(config.ae_hidden, np.float32),
            ola=OlaState.zeros(window),
        )

    def reset(self) -> "StreamState":
        """Zero everything in place; the next step behaves as stream start."""
        self.map_in_hist[:] = 0.0
        self.ae_hist[:] = 0.0
        self.bottleneck_hidden[:] = 0.0
        self.ae_hidden[:] = 0.0
        self.ola.tail[:] = 0.0
        return self


@dataclass
class ActivationTrace:
    """Per-frame intermediate activations, for cross-implementation checks."""

    map_in: list = field(default_factory=list)    # (F',) per frame
    encoder: list = field(default_factory=list)   # (C_last, F_enc)
    bottleneck: list = field(default_factory=list)
    decoder: list = field(default_factory=list)   # (F',)
    ae: list = field(default_factory=list)        # (F',)
    mask_pre: list = field(default_factory=list)  # (F',) mask-head output
    mask: list = field(default_factory=list)      # (F,)

    _KEYS = ("map_in", "encoder", "bottleneck", "decoder", "ae", "mask_pre", "mask")

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "h_map_in": np.stack(self.map_in),
            "h_enc": np.stack(self.encoder),
            "h_bott": np.stack(self.bottleneck),
            "h_dec": np.stack(self.decoder),
            "h_ae": np.stack(self.ae),
            "h_mask": np.stack(self.mask_pre),
            "mask": np.stack(self.mask),
        }

    def save(self, path, frames: np.ndarray) -> None:
        np.savez(path, frames=np.asarray(frames, np.float32), **self.arrays())


@dataclass
class _EncBlock:
    expand: ConvParams
    norm1: tuple[np.ndarray, np.ndarray]
    depthwise: ConvParams
    norm2: tuple[np.ndarray, np.ndarray]
    project: ConvParams
    norm3: tuple[np.ndarray, np.ndarray]


@dataclass
class _DecBlock:
    fuse: ConvParams
    norm1: tuple[np.ndarray, np.ndarray]
    tconv: ConvParams
    norm2: tuple[np.ndarray, np.ndarray]


class StreamingDenoiser:
    """Frame-by-frame denoising engine bound to one weight set."""

    def __init__(self, weights: ModelWeights, window: WindowSpec | None = None):
        cfg = weights.config
        self.config = cfg
        if window is None:
            fft_size = 2 * (cfg.n_bins - 1)
            window = WindowSpec(fft_size=fft_size, hop=fft_size // 2)
        self.window = window
        if self.window.n_bins != cfg.n_bins:
            raise InvalidArgumentError(
                f"window implies {self.window.n_bins} bins, config has {cfg.n_bins}"
            )
        self._eps = cfg.norm_eps
        w = weights
        self._norms = {
            name: (w[f"{name}.gamma"], w[f"{name}.beta"])
            for name in self._norm_names(cfg)
        }
        self._mi_w, self._mi_b = w["map_in.fc.weight"], w["map_in.fc.bias"]
        self._entry = ConvParams(
            in_channels=1,
            out_channels=cfg.entry_channels,
            kernel=(cfg.lookback + 1, cfg.entry_freq_kernel),
            padding=(0, 0) + same_pad(cfg.n_features, cfg.entry_freq_kernel, 1),
            weight=w["encoder.entry.conv.weight"],
        )
        self._blocks: list[_EncBlock] = []
        feats = cfg.encoder_features
        for i, (k, s, c_in, c_out) in enumerate(
            zip(cfg.kernels, cfg.strides, cfg.encoder_in_channels, cfg.block_channels),
            start=1,
        ):
            p = f"encoder.block{i}"
            self._blocks.append(_EncBlock(
                expand=ConvParams(c_in, cfg.expand_channels, 1, 1, (0, 0),
                                  weight=w[f"{p}.expand.weight"]),
                norm1=self._norms[f"{p}.norm1"],
                depthwise=ConvParams(cfg.expand_channels, cfg.expand_channels, k, s,
                                     same_pad(feats[i - 1], k, s), depthwise=True,
                                     weight=w[f"{p}.depthwise.weight"]),
                norm2=self._norms[f"{p}.norm2"],
                project=ConvParams(cfg.expand_channels, c_out, 1, 1, (0, 0),
                                   weight=w[f"{p}.project.weight"]),
                norm3=self._norms[f"{p}.norm3"],
            ))
        f_enc = feats[-1]
        c_last = cfg.block_channels[-1]
        self._bott_reduce = ConvParams(f_enc, 1, 1, 1, (0, 0),
                                       weight=w["bottleneck.reduce.weight"],
                                       bias=w["bottleneck.reduce.bias"])
        self._bott_gru = GruParams(c_last, cfg.gru_hidden,
                                   w["bottleneck.gru.weight_ih"],
                                   w["bottleneck.gru.weight_hh"],
                                   w["bottleneck.gru.bias_ih"],
                                   w["bottleneck.gru.bias_hh"])
        self._bott_expand = ConvParams(1, f_enc, 1, 1, (0, 0),
                                       weight=w["bottleneck.expand.weight"],
                                       bias=w["bottleneck.expand.bias"])
        self._dec_blocks: list[_DecBlock] = []
        dec_feats = cfg.decoder_features
        d = cfg.decoder_channels
        for i, (k, s, c_skip) in enumerate(
            zip(cfg.decoder_kernels, cfg.decoder_strides, cfg.skip_channels), start=1
        ):
            p = f"decoder.block{i}"
            c_prev = c_last if i == 1 else d
            # the transposed conv mirrors the encoder conv that produced
            # dec_feats[i-1] from dec_feats[i], hence the matching padding
            self._dec_blocks.append(_DecBlock(
                fuse=ConvParams(c_prev + c_skip, d, 1, 1, (0, 0),
                                weight=w[f"{p}.fuse.weight"]),
                norm1=self._norms[f"{p}.norm1"],
                tconv=ConvParams(d, d, k, s, same_pad(dec_feats[i], k, s),
                                 transposed=True, weight=w[f"{p}.tconv.weight"]),
                norm2=self._norms[f"{p}.norm2"],
            ))
        self._collapse = ConvParams(d, 1, 1, 1, (0, 0),
                                    weight=w["decoder.collapse.weight"],
                                    bias=w["decoder.collapse.bias"])
        self._ae_fc_in = (w["ae.fc_in.weight"], w["ae.fc_in.bias"])
        self._ae_gru = GruParams(cfg.ae_hidden, cfg.ae_hidden,
                                 w["ae.gru.weight_ih"], w["ae.gru.weight_hh"],
                                 w["ae.gru.bias_ih"], w["ae.gru.bias_hh"])
        self._ae_fc_out = (w["ae.fc_out.weight"], w["ae.fc_out.bias"])
        self._mask_conv = ConvParams(
            2, 1, (cfg.mask_lookback + 1, cfg.mask_freq_kernel),
            padding=(0, 0) + same_pad(cfg.n_features, cfg.mask_freq_kernel, 1),
            weight=w["mask.conv.weight"], bias=w["mask.conv.bias"],
        )
        self._mo_w, self._mo_b = w["map_out.fc.weight"], w["map_out.fc.bias"]

    @staticmethod
    def _norm_names(cfg: ModelConfig) -> list[str]:
        names = ["map_in.norm_in", "map_in.norm_out", "encoder.entry.norm",
                 "ae.norm_in", "ae.norm_out"]
        for i in range(1, cfg.n_blocks + 1):
            names += [f"encoder.block{i}.norm{j}" for j in (1, 2, 3)]
            names += [f"decoder.block{i}.norm{j}" for j in (1, 2)]
        return names

    def _norm(self, x: np.ndarray, params: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        return causal_instance_norm(x, params[0], params[1], self._eps)

    def new_state(self) -> StreamState:
        return StreamState.zeros(self.config, self.window)

    # -- sub-modules -------------------------------------------------------

    def map_in(self, x: np.ndarray) -> np.ndarray:
        """Normalize, map F -> F', normalize, hard-swish."""
        x = np.asarray(x, dtype=np.float32)
        if x.shape != (self.config.n_bins,):
            raise InvalidArgumentError(
                f"map_in expects {self.config.n_bins} magnitudes, got {x.shape}"
            )
        h = self._norm(x, self._norms["map_in.norm_in"])
        h = affine(h, self._mi_w, self._mi_b)
        h = self._norm(h, self._norms["map_in.norm_out"])
        return hard_swish(h)

    def encoder(self, in_pad: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Look-back stack (lookback+1, F') -> (C_last, F_enc) plus skips."""
        cfg = self.config
        if in_pad.shape != (cfg.lookback + 1, cfg.n_features):
            raise InvalidArgumentError(
                f"encoder expects ({cfg.lookback + 1}, {cfg.n_features}), got {in_pad.shape}"
            )
        h = conv2d(in_pad[None, :, :], self._entry)[:, 0, :]   # (entry_channels, F')
        h = hard_swish(self._norm(h, self._norms["encoder.entry.norm"]))
        skips: list[np.ndarray] = []
        for b in self._blocks:
            h = hard_swish(self._norm(conv1d(h, b.expand), b.norm1))
            h = hard_swish(self._norm(conv1d(h, b.depthwise), b.norm2))
            # projection back down has no nonlinearity
            h = self._norm(conv1d(h, b.project), b.norm3)
            skips.append(h)
        return h, skips

    def bottleneck(
        self, h_enc: np.ndarray, hidden: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Collapse to a vector, one GRU step, restore; dims preserved."""
        vec = conv1d(h_enc.T.copy(), self._bott_reduce)[0]    # (C_last,)
        hidden = gru_step(vec, self._bott_gru, hidden)
        out = conv1d(hidden[None, :], self._bott_expand)      # (F_enc, C_last)
        return np.ascontiguousarray(out.T), hidden

    def decoder(self, h_bott: np.ndarray, skips: list[np.ndarray]) -> np.ndarray:
        """Expand back to an F' vector using the encoder skips (reversed)."""
        if len(skips) != self.config.n_blocks:
            raise InvalidArgumentError("decoder: wrong number of skip tensors")
        h = h_bott
        for i, b in enumerate(self._dec_blocks):
            skip = skips[self.config.n_blocks - 1 - i]
            if skip.shape[1] != h.shape[1]:
                raise InvalidArgumentError(
                    f"decoder block {i + 1}: skip features {skip.shape} != input {h.shape}"
                )
            h = np.concatenate([h, skip], axis=0)
            h = hard_swish(self._norm(conv1d(h, b.fuse), b.norm1))
            h = hard_swish(self._norm(conv_transpose1d(h, b.tconv), b.norm2))
        return conv1d(h, self._collapse)[0]

    def ae(self, h_dec: np.ndarray, hidden: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """FNN down, one GRU step, FNN back up; only the first FNN gets a nonlinearity."""
        h = affine(h_dec, *self._ae_fc_in)
        h = hard_swish(self._norm(h, self._norms["ae.norm_in"]))
        hidden = gru_step(h, self._ae_gru, hidden)
        h = affine(hidden, *self._ae_fc_out)
        return self._norm(h, self._norms["ae.norm_out"]), hidden

    def mask_head(self, in_hist: np.ndarray, ae_hist: np.ndarray) -> np.ndarray:
        """2-channel 2D conv over the short histories; no norm or nonlinearity."""
        t = self.config.mask_lookback + 1
        f = self.config.n_features
        if in_hist.shape != (t, f) or ae_hist.shape != (t, f):
            raise InvalidArgumentError(
                f"mask_head expects two ({t}, {f}) stacks, got {in_hist.shape}/{ae_hist.shape}"
            )
        stacked = np.stack([in_hist, ae_hist])   # channel 0: mapped input
        return conv2d(stacked, self._mask_conv)[0, 0, :]

    def map_out(self, h_mask: np.ndarray) -> np.ndarray:
        """Affine F' -> F followed by a sigmoid; entries lie in [0, 1]."""
        return sigmoid(affine(h_mask, self._mo_w, self._mo_b))

    # -- stepping ------------------------------------------------------------

    def _push(self, hist: np.ndarray, row: np.ndarray) -> None:
        hist[:-1] = hist[1:]
        hist[-1] = row

    def _step_core(
        self,
        h_map_in: np.ndarray,
        state: StreamState,
        trace: ActivationTrace | None = None,
    ) -> np.ndarray:
        """Everything between the input and output mappings; returns the
        mask-head output (F') and advances the stream state."""
        cfg = self.config
        self._push(state.map_in_hist, h_map_in)
        h_enc, skips = self.encoder(state.map_in_hist)
        h_bott, state.bottleneck_hidden = self.bottleneck(
            h_enc, state.bottleneck_hidden
        )
        h_dec = self.decoder(h_bott, skips)
        h_ae, state.ae_hidden = self.ae(h_dec, state.ae_hidden)
        in_hist = state.map_in_hist[-(cfg.mask_lookback + 1):]
        ae_hist = np.vstack([state.ae_hist, h_ae[None, :]])
        h_mask = self.mask_head(in_hist, ae_hist)
        if cfg.mask_lookback:
            self._push(state.ae_hist, h_ae)
        if trace is not None:
            trace.map_in.append(h_map_in.copy())
            trace.encoder.append(h_enc)
            trace.bottleneck.append(h_bott)
            trace.decoder.append(h_dec)
            trace.ae.append(h_ae)
            trace.mask_pre.append(h_mask)
        return h_mask

    def step(
        self,
        noisy: SpectralFrame,
        state: StreamState,
        trace: ActivationTrace | None = None,
    ) -> tuple[np.ndarray, SpectralFrame]:
        """One causal step: returns (mask, denoised frame) and mutates state."""
        mask = self.step_mask(noisy.magnitude, state, trace)
        return mask, apply_mask(noisy, mask)

    def step_mask(
        self,
        magnitude: np.ndarray,
        state: StreamState,
        trace: ActivationTrace | None = None,
    ) -> np.ndarray:
        h = self.map_in(magnitude)
        h_mask = self._step_core(h, state, trace)
        mask = self.map_out(h_mask)
        if trace is not None:
            trace.mask.append(mask)
        return mask

    def process_offline(
        self, magnitudes: np.ndarray, trace: ActivationTrace | None = None
    ) -> np.ndarray:
        """Whole-utterance reference path with explicit history indexing.

        Computes the identical causal recurrence as repeated :meth:`step`
        calls but assembles every look-back window by slicing zero-padded
        history matrices; used as the streaming-equivalence oracle.
        """
        cfg = self.config
        mags = np.asarray(magnitudes, dtype=np.float32)
        if mags.ndim != 2 or mags.shape[1] != cfg.n_bins:
            raise InvalidArgumentError(
                f"process_offline expects (T, {cfg.n_bins}), got {mags.shape}"
            )
        t_frames = mags.shape[0]
        mapped = np.vstack([
            np.zeros((cfg.lookback, cfg.n_features), np.float32),
            np.stack([self.map_in(x) for x in mags]),
        ])
        ae_rows = [np.zeros(cfg.n_features, np.float32)] * cfg.mask_lookback
        bott_hidden = np.zeros(cfg.gru_hidden, np.float32)
        ae_hidden = np.zeros(cfg.ae_hidden, np.float32)
        masks = np.empty((t_frames, cfg.n_bins), np.float32)
        for t in range(t_frames):
            in_pad = mapped[t: t + cfg.lookback + 1]
            h_enc, skips = self.encoder(in_pad)
            h_bott, bott_hidden = self.bottleneck(h_enc, bott_hidden)
            h_dec = self.decoder(h_bott, skips)
            h_ae, ae_hidden = self.ae(h_dec, ae_hidden)
            lo = t + cfg.lookback - cfg.mask_lookback
            in_hist = mapped[lo: t + cfg.lookback + 1]
            ae_hist = np.vstack(ae_rows[len(ae_rows) - cfg.mask_lookback:] + [h_ae]) \
                if cfg.mask_lookback else h_ae[None, :]
            h_mask = self.mask_head(in_hist, ae_hist)
            masks[t] = self.map_out(h_mask)
            ae_rows.append(h_ae)
            if trace is not None:
                trace.map_in.append(mapped[t + cfg.lookback].copy())
                trace.encoder.append(h_enc)
                trace.bottleneck.append(h_bott)
                trace.decoder.append(h_dec)
                trace.ae.append(h_ae)
                trace.mask_pre.append(h_mask)
                trace.mask.append(masks[t].copy())
        return masks
