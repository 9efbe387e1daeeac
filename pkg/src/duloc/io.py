"""WAV, CSV and truth-sidecar file handling."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

FORMAT_PCM = 1
FORMAT_FLOAT = 3
FORMAT_EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    """Malformed WAV data; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def wav_write(path, data: np.ndarray, fs: float) -> None:
    """Write ``data`` of shape ``(channels, samples)`` as 32-bit float PCM."""
    data = np.asarray(data)
    if data.ndim == 1:
        data = data[None]
    n_ch, n = data.shape
    payload = np.ascontiguousarray(data.T, dtype="<f4").tobytes()
    rate = int(round(fs))
    block = 4 * n_ch
    fmt = struct.pack("<HHIIHH", FORMAT_FLOAT, n_ch, rate, rate * block, block, 32)
    fact = struct.pack("<I", n)
    body = (b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"fact" + struct.pack("<I", len(fact)) + fact
            + b"data" + struct.pack("<I", len(payload)) + payload)
    if len(payload) % 2:
        body += b"\0"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def wav_read(path) -> tuple[np.ndarray, int]:
    """Read a 16-bit integer or 32-bit float WAV; returns ``(data[ch, n], fs)``.

    Integer samples are scaled by 1/32768.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavError("not a RIFF/WAVE file", 0)
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        start = pos + 8
        if start + size > len(raw):
            raise WavError(f"chunk {cid!r} claims {size} bytes past end of file", pos)
        if cid == b"fmt ":
            if size < 16:
                raise WavError("fmt chunk shorter than 16 bytes", pos)
            tag, n_ch, rate, _, block, bits = struct.unpack_from("<HHIIHH", raw, start)
            if tag == FORMAT_EXTENSIBLE:
                if size < 40:
                    raise WavError("extensible fmt chunk shorter than 40 bytes", pos)
                (tag,) = struct.unpack_from("<H", raw, start + 24)
            fmt = (tag, n_ch, rate, block, bits, pos)
        elif cid == b"data":
            data = (start, size)
        pos = start + size + (size & 1)
    if fmt is None:
        raise WavError("missing fmt chunk", pos)
    if data is None:
        raise WavError("missing data chunk", pos)
    tag, n_ch, rate, block, bits, fpos = fmt
    if n_ch < 1:
        raise WavError("zero channels", fpos)
    if (tag, bits) == (FORMAT_FLOAT, 32):
        dtype, scale = "<f4", 1.0
    elif (tag, bits) == (FORMAT_PCM, 16):
        dtype, scale = "<i2", 1.0 / 32768
    else:
        raise WavError(f"unsupported sample format tag={tag} bits={bits}", fpos)
    start, size = data
    width = bits // 8
    if size % (width * n_ch):
        raise WavError(f"data size {size} is not a whole number of {n_ch}-channel frames", start)
    samples = np.frombuffer(raw, dtype=dtype, count=size // width, offset=start)
    out = samples.reshape(-1, n_ch).T.astype(np.float64) * scale
    return out, rate


def csv_write(path, header: list[str], rows) -> None:
    """Plain CSV with ``\\n`` line endings; floats written with ``repr`` precision."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_spectrum_csv(path, angles, power) -> None:
    csv_write(path, ["theta_deg", "power"], zip(np.asarray(angles, float), np.asarray(power, float)))


def truth_path(wav_path) -> Path:
    return Path(wav_path).with_suffix(".json")


def write_truth(path, *, doas, sigma2: float, seed: int, spacings, c: float, fs: float,
                snr_db) -> None:
    doc = {
        "doas_deg": [float(d) for d in doas],
        "sigma2": float(sigma2),
        "seed": int(seed),
        "snr_db": None if snr_db is None else float(snr_db),
        "fs": float(fs),
        "geometry": {"spacings_m": [float(d) for d in spacings], "c": float(c)},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_truth(path) -> dict:
    return json.loads(Path(path).read_text())
