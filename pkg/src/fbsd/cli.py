"""Thin command-line client for the fbsd service.

Every command builds an HTTP request. By default it is dispatched to the
service application in-process (no socket); pass ``--server`` or set
``FBSD_SERVER`` to talk to a running instance instead. Heavy imports are
deferred so thread limits can be applied before numpy loads its BLAS.
"""

from __future__ import annotations

import asyncio
import io
import json
import os
import pathlib
import sys
import zipfile

import click

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _configure_threads() -> None:
    n = os.environ.get("FBSD_THREADS")
    if n:
        for var in _THREAD_VARS:
            os.environ.setdefault(var, n)


async def _request_async(server: str | None, method: str, path: str, **kw):
    import httpx

    if server:
        async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
            return await client.request(method, path, **kw)
    from .service.app import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://fbsd.local", timeout=600.0
    ) as client:
        return await client.request(method, path, **kw)


def _call(server: str | None, method: str, path: str, **kw):
    response = asyncio.run(_request_async(server, method, path, **kw))
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(detail)
    return response


def _file_part(path: str, media: str = "application/octet-stream"):
    return (pathlib.Path(path).name, pathlib.Path(path).read_bytes(), media)


@click.group()
@click.option(
    "--server",
    default=None,
    envvar="FBSD_SERVER",
    help="Base URL of a running fbsd service; default runs it in-process.",
)
@click.pass_context
def cli(ctx: click.Context, server: str | None) -> None:
    """Causal full-band speech denoiser."""
    ctx.obj = server


@cli.command()
@click.argument("in_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_wav", type=click.Path(dir_okay=False))
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def denoise(server: str | None, in_wav: str, out_wav: str, weights: str) -> None:
    """Denoise a 48 kHz mono WAV file."""
    r = _call(server, "POST", "/denoise", files={
        "audio": _file_part(in_wav, "audio/wav"),
        "weights": _file_part(weights),
    })
    pathlib.Path(out_wav).write_bytes(r.content)
    click.echo(
        f"frames processed: {r.headers.get('X-Fbsd-Frames', '?')}  "
        f"wall time: {float(r.headers.get('X-Fbsd-Wall-Seconds', 'nan')):.3f} s"
    )


@cli.command()
@click.argument("clean", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_wav", type=click.Path(dir_okay=False))
@click.option("--noise", "noises", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Noise WAV (repeat for a second noise, at most two).")
@click.option("--snr", type=int, default=None,
              help="Integer SNR in dB within [-10, 25]; sampled when omitted.")
@click.option("--peak", type=float, default=None,
              help="Mixture peak in [0.001, 0.999]; sampled when omitted.")
@click.option("--seed", type=int, default=0)
@click.option("--segment-seconds", type=float, default=None,
              help="Also split the mixture into fixed-length segments.")
@click.pass_obj
def mix(server, clean, out_wav, noises, snr, peak, seed, segment_seconds) -> None:
    """Mix clean speech with up to two noises at a controlled SNR."""
    files = [("clean", _file_part(clean, "audio/wav"))]
    files += [("noise", _file_part(n, "audio/wav")) for n in noises]
    data = {"seed": str(seed)}
    if snr is not None:
        data["snr_db"] = str(snr)
    if peak is not None:
        data["peak"] = str(peak)
    if segment_seconds is not None:
        data["segment_seconds"] = str(segment_seconds)
    r = _call(server, "POST", "/mix", files=files, data=data)
    click.echo(
        f"snr: {r.headers['X-Fbsd-Snr-Db']} dB  peak: {float(r.headers['X-Fbsd-Peak']):.3f}"
    )
    if segment_seconds is None:
        pathlib.Path(out_wav).write_bytes(r.content)
        return
    if out_wav.endswith(".zip"):
        pathlib.Path(out_wav).write_bytes(r.content)
        click.echo(f"segments: {r.headers['X-Fbsd-Segments']} (zip)")
        return
    stem = pathlib.Path(out_wav)
    with zipfile.ZipFile(io.BytesIO(r.content)) as zf:
        for i, name in enumerate(sorted(zf.namelist())):
            target = stem.with_name(f"{stem.stem}_{i:03d}.wav")
            target.write_bytes(zf.read(name))
    click.echo(f"segments: {r.headers['X-Fbsd-Segments']}")


@cli.command("eval")
@click.argument("clean", type=click.Path(exists=True, dir_okay=False))
@click.argument("processed", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Write the line-delimited report here.")
@click.pass_obj
def eval_cmd(server, clean, processed, report) -> None:
    """Print SI-SDR, SD-SDR and STOI for a clean/processed pair."""
    r = _call(server, "POST", "/eval", files={
        "clean": _file_part(clean, "audio/wav"),
        "processed": _file_part(processed, "audio/wav"),
    })
    body = r.json()
    click.echo(body["table"])
    if report:
        pathlib.Path(report).write_text(body["jsonl"])


@cli.command()
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--passes", type=int, default=100, show_default=True)
@click.option("--include-dsp", is_flag=True,
              help="Time the STFT/overlap-add path together with the DNN.")
@click.option("--no-mapping", is_flag=True,
              help="Skip the with-mapping measurement, report only the core.")
@click.pass_obj
def bench(server, weights, passes, include_dsp, no_mapping) -> None:
    """Measure per-frame wall time and real-time factor."""
    r = _call(server, "POST", "/bench", files={"weights": _file_part(weights)}, data={
        "passes": str(passes),
        "include_dsp": "true" if include_dsp else "false",
        "no_mapping": "true" if no_mapping else "false",
    })
    click.echo(r.json()["text"])


@cli.command()
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Read the configuration from this weight file (default config otherwise).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def info(server, weights, as_json) -> None:
    """Print parameter and MACs accounting."""
    files = {"weights": _file_part(weights)} if weights else None
    r = _call(server, "POST", "/info", files=files)
    body = r.json()
    if as_json:
        body.pop("text")
        click.echo(json.dumps(body, indent=2))
    else:
        click.echo(body["text"])


@cli.command("init-weights")
@click.argument("out_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def init_weights(server, out_path, seed) -> None:
    """Write randomly initialized weights for the default configuration."""
    r = _call(server, "POST", "/weights/init", json={"seed": seed})
    pathlib.Path(out_path).write_bytes(r.content)
    click.echo(f"wrote {len(r.content)} bytes to {out_path}")


@cli.command()
@click.argument("out_npz", type=click.Path(dir_okay=False))
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--frames", required=True, type=click.Path(exists=True, dir_okay=False),
              help=".npy file of shape (T, n_bins) magnitude frames.")
@click.pass_obj
def trace(server, out_npz, weights, frames) -> None:
    """Dump per-frame engine activations for the given magnitude frames."""
    r = _call(server, "POST", "/trace", files={
        "weights": _file_part(weights),
        "frames": _file_part(frames),
    })
    pathlib.Path(out_npz).write_bytes(r.content)
    click.echo(f"wrote activation trace to {out_npz}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("fbsd.service.app:app", host=host, port=port)


def main() -> None:
    argv = sys.argv[1:]
    if argv and argv[0] == "bench":
        # single-threaded benchmarking unless explicitly overridden
        os.environ.setdefault("FBSD_THREADS", "1")
    _configure_threads()
    cli(prog_name="fbsd")


if __name__ == "__main__":
    main()
