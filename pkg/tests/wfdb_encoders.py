"""Test-only WFDB writers used to round-trip the readers."""

import numpy as np

from ecgtda.wfdb import beat_code_table

_SYMBOL_TO_CODE = {sym: code for code, (sym, _) in beat_code_table().items()}


def write_header(path, record_name, fs, n_samples, channels):
    """channels: sequence of (file_name, fmt, gain, zero)."""
    lines = [f"{record_name} {len(channels)} {fs:g} {n_samples}"]
    for file_name, fmt, gain, zero in channels:
        lines.append(f"{file_name} {fmt} {gain:g}({zero})/mV")
    path.write_text("\n".join(lines) + "\n")


def write_212(path, channel_samples):
    """channel_samples: (n_channels, n_samples) 12-bit integers."""
    flat = np.asarray(channel_samples).T.reshape(-1)
    if flat.size % 2:
        flat = np.append(flat, 0)
    out = bytearray()
    for s1, s2 in zip(flat[0::2], flat[1::2]):
        a, b = int(s1) & 0xFFF, int(s2) & 0xFFF
        out.append(a & 0xFF)
        out.append(((a >> 8) & 0x0F) | (((b >> 8) & 0x0F) << 4))
        out.append(b & 0xFF)
    path.write_bytes(bytes(out))


def write_16(path, channel_samples):
    flat = np.asarray(channel_samples, dtype="<i2").T.reshape(-1)
    path.write_bytes(flat.tobytes())


def _word(code, payload):
    return bytes(((code << 10) | payload).to_bytes(2, "little"))


def write_annotations(path, annotations, extras=()):
    """annotations: ((sample_index, symbol), ...), strictly increasing.

    extras: (position, raw_bytes) pairs spliced in before the annotation
    at that list position, for exercising bookkeeping codes.
    """
    extra_map = {}
    for pos, blob in extras:
        extra_map.setdefault(pos, b"")
        extra_map[pos] += blob
    out = bytearray()
    time = 0
    for i, (index, symbol) in enumerate(annotations):
        out += extra_map.get(i, b"")
        delta = index - time
        if delta >= 1024 or delta < 0:
            out += _word(59, 0)  # SKIP
            out += ((delta >> 16) & 0xFFFF).to_bytes(2, "little")
            out += (delta & 0xFFFF).to_bytes(2, "little")
            delta = 0
        out += _word(_SYMBOL_TO_CODE[symbol], delta)
        time = index
    out += extra_map.get(len(annotations), b"")
    out += _word(0, 0)
    path.write_bytes(bytes(out))
