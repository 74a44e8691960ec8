"""File formats.

* signals: raw little-endian float64 (``name.bin``) with a JSON sidecar
  (``name.json``: length, role, optional sample rate);
* audio: 16-bit PCM mono WAV, samples mapped to [-1, 1) by dividing by 2^15;
* tables: RFC-4180 CSV with a header row;
* run metadata: ``manifest.json`` (one per output directory, no timestamps).
"""

from __future__ import annotations

import csv
import json
import math
import os
import wave
from pathlib import Path

import numpy as np

from .errors import IOFailure, UnsupportedFormat
from .synth import Instance, SynthSpec, make_instance

MANIFEST = "manifest.json"
OUTPUT_DIR_ENV = "ALPA_OUTPUT_DIR"
_LE_F64 = np.dtype("<f8")


def tool_version():
    from . import __version__

    return __version__


def default_output_dir():
    return Path(os.environ.get(OUTPUT_DIR_ENV) or "alpa_out")


def dump_json(obj, path):
    """Deterministic JSON: sorted keys, non-finite floats written as null."""

    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {str(k): clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        if isinstance(v, Path):
            return str(v)
        return v

    Path(path).write_text(json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IOFailure(f"{path}: invalid JSON ({exc})") from exc


# -- signals ------------------------------------------------------------------

def _sidecar(path):
    return Path(path).with_suffix(".json")


def write_signal(path, x, role="signal", sample_rate=None):
    path = Path(path).with_suffix(".bin")
    x = np.ascontiguousarray(x, dtype=_LE_F64)
    path.write_bytes(x.tobytes())
    meta = {"length": int(x.size), "role": role, "dtype": "float64-le"}
    if sample_rate is not None:
        meta["sample_rate"] = int(sample_rate)
    dump_json(meta, _sidecar(path))
    return path


def _read_bin(path):
    raw = Path(path).read_bytes()
    if len(raw) % 8:
        raise IOFailure(f"{path}: size {len(raw)} is not a multiple of 8 bytes")
    x = np.frombuffer(raw, dtype=_LE_F64).astype(np.float64)
    side = _sidecar(path)
    if side.exists():
        meta = load_json(side)
        if meta.get("length") is not None and meta["length"] != x.size:
            raise IOFailure(f"{path}: sidecar says {meta['length']} samples, file has {x.size}")
    return x


def write_wav(path, x, sample_rate=8000):
    """Write PCM16 mono; values are clipped to [-1, 1 - 2^-15]."""
    q = np.clip(np.round(np.asarray(x, dtype=np.float64) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(int(sample_rate))
        fh.writeframes(q.tobytes())
    return Path(path)


def read_wav(path):
    """Return (samples in [-1, 1), sample_rate) for a PCM16 mono file."""
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getnchannels() != 1 or fh.getsampwidth() != 2 or fh.getcomptype() != "NONE":
                raise UnsupportedFormat(
                    f"{path}: only 16-bit PCM mono WAV is supported "
                    f"(got {fh.getnchannels()} channel(s), {8 * fh.getsampwidth()} bit)")
            rate = fh.getframerate()
            frames = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    return np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0, rate


def read_signal(path):
    """Load a 1-D signal from .bin, .wav or a one-column .csv/.txt file."""
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"{path}: no such file")
    suffix = path.suffix.lower()
    if suffix == ".bin":
        return _read_bin(path)
    if suffix == ".wav":
        return read_wav(path)[0]
    if suffix in (".csv", ".txt"):
        try:
            return np.loadtxt(path, delimiter="," if suffix == ".csv" else None, ndmin=1)
        except ValueError as exc:
            raise IOFailure(f"{path}: {exc}") from exc
    raise UnsupportedFormat(f"{path}: unsupported signal format {suffix!r} (use .bin, .wav, .csv)")


# -- tables -------------------------------------------------------------------

def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return Path(path)


def read_csv(path):
    """Return (header, rows) with numeric cells parsed as float and empty cells as NaN."""

    def parse(cell):
        if cell == "":
            return math.nan
        try:
            return float(cell)
        except ValueError:
            return cell

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise IOFailure(f"{path}: empty CSV") from exc
        return header, [[parse(c) for c in row] for row in reader]


# -- instances ----------------------------------------------------------------

_INSTANCE_SIGNALS = ("h_true", "e_true", "y_clean", "y")


def write_instance(outdir, spec, inst):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {name: write_signal(outdir / name, getattr(inst, name), role=name).name
             for name in _INSTANCE_SIGNALS}
    meta = {
        "spec": spec.to_dict(),
        "signals": files,
        "filter_len": int(inst.h_true.size),
        "excitation_len": int(inst.e_true.size),
        "observation_len": int(inst.y.size),
        "snr_actual_db": inst.snr_actual_db,
        "samples": {name: getattr(inst, name).tolist() for name in _INSTANCE_SIGNALS},
    }
    dump_json(meta, outdir / "instance.json")
    return {name: str(outdir / f) for name, f in files.items()} | {"instance": str(outdir / "instance.json")}


def read_instance(path, verify=True):
    """Load an instance from a directory or its ``instance.json``.

    With ``verify`` the spec is re-synthesized and every stored signal must
    match bit for bit.
    """
    path = Path(path)
    meta_path = path / "instance.json" if path.is_dir() else path
    if not meta_path.exists():
        raise IOFailure(f"{meta_path}: no such file")
    meta = load_json(meta_path)
    spec = SynthSpec.from_dict(meta["spec"])
    signals = {name: _read_bin(meta_path.parent / meta["signals"][name]) for name in _INSTANCE_SIGNALS}
    snr = meta.get("snr_actual_db")
    inst = Instance(**signals, snr_actual_db=math.inf if snr is None else float(snr))
    if verify:
        fresh = make_instance(spec)
        for name in _INSTANCE_SIGNALS:
            if not np.array_equal(getattr(fresh, name), signals[name]):
                raise IOFailure(f"{meta_path}: stored {name} does not match its spec")
    return spec, inst


# -- manifest -----------------------------------------------------------------

def write_manifest(outdir, command, argv, config, seeds=(), artifacts=()):
    outdir = Path(outdir)
    rel = sorted(str(Path(a).relative_to(outdir)) if Path(a).is_relative_to(outdir) else str(a)
                 for a in artifacts)
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seeds": [int(s) for s in seeds],
        "artifacts": rel,
        "version": tool_version(),
    }
    dump_json(manifest, outdir / MANIFEST)
    return outdir / MANIFEST


def read_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    if not path.exists():
        raise IOFailure(f"{path}: no such file")
    return load_json(path)
