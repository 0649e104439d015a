"""Readers for Physionet WFDB records: .hea headers, .dat signals
(formats 212 and 16), and MIT-format .atr annotations.

Only the pieces needed to load single-channel annotated ECG records are
implemented; writing is left to test-only encoders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    InvalidInputError,
    ParseError,
    TruncatedDataError,
    UnsupportedFormatError,
)
from .tda import Signal

__all__ = [
    "ChannelSpec",
    "HeaderInfo",
    "AnnotatedRecord",
    "DatasetManifest",
    "read_header",
    "read_signal_212",
    "read_signal_16",
    "read_annotations",
    "to_physical",
    "read_record",
    "beat_code_table",
    "is_beat_symbol",
    "build_manifest",
]

SUPPORTED_FORMATS = (212, 16)
DEFAULT_FS = 250.0
DEFAULT_GAIN = 200.0

# MIT annotation bookkeeping codes (consumed, never emitted)
_SKIP, _NUM, _SUB, _CHN, _AUX = 59, 60, 61, 62, 63


@dataclass(frozen=True)
class ChannelSpec:
    file_name: str
    fmt: int
    adc_gain: float
    adc_zero: int


@dataclass(frozen=True)
class HeaderInfo:
    record_name: str
    n_channels: int
    fs: float
    n_samples: int
    channels: tuple


def _header_fields(line: str, lineno: int, minimum: int):
    fields = line.split()
    if len(fields) < minimum:
        raise ParseError(f"line {lineno}: expected at least {minimum} fields")
    return fields


def read_header(path) -> HeaderInfo:
    """Parse a WFDB .hea file (record line + one line per channel)."""
    lines = Path(path).read_text().splitlines()
    body = [
        (i + 1, ln.strip())
        for i, ln in enumerate(lines)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not body:
        raise ParseError("line 1: empty header")
    lineno, record_line = body[0]
    fields = _header_fields(record_line, lineno, 2)
    record_name = fields[0].split("/")[0]
    try:
        n_channels = int(fields[1])
        fs = float(fields[2].split("/")[0]) if len(fields) > 2 else DEFAULT_FS
        n_samples = int(fields[3]) if len(fields) > 3 else 0
    except ValueError as exc:
        raise ParseError(f"line {lineno}: bad record line field ({exc})") from None
    if n_channels < 1:
        raise ParseError(f"line {lineno}: channel count must be positive")
    if len(body) < 1 + n_channels:
        raise ParseError(f"header declares {n_channels} channels, fewer lines present")
    channels = []
    for lineno, line in body[1 : 1 + n_channels]:
        fields = _header_fields(line, lineno, 2)
        fmt_field = fields[1]
        # strip the xN / :skew / +offset modifiers
        for sep in "x:+":
            fmt_field = fmt_field.split(sep)[0]
        try:
            fmt = int(fmt_field)
        except ValueError:
            raise ParseError(f"line {lineno}: bad format field {fields[1]!r}") from None
        if fmt not in SUPPORTED_FORMATS:
            raise UnsupportedFormatError(f"line {lineno}: signal format {fmt}")
        gain, zero = DEFAULT_GAIN, 0
        if len(fields) > 2:
            gain_field = fields[2].split("/")[0]
            if "(" in gain_field:  # gain(baseline) carries the zero level
                gain_field, baseline = gain_field.rstrip(")").split("(")
                try:
                    zero = int(baseline)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad baseline field") from None
            try:
                gain = float(gain_field)
            except ValueError:
                raise ParseError(f"line {lineno}: bad gain field {fields[2]!r}") from None
            if gain == 0:
                gain = DEFAULT_GAIN
            elif "(" not in fields[2] and len(fields) > 4:
                try:
                    zero = int(fields[4])
                except ValueError:
                    raise ParseError(f"line {lineno}: bad adc zero field") from None
        channels.append(ChannelSpec(fields[0], fmt, gain, zero))
    return HeaderInfo(record_name, n_channels, fs, n_samples, tuple(channels))


def read_signal_212(path, channel_count, n_samples, channel_index) -> np.ndarray:
    """Decode format 212: two 12-bit two's-complement samples per 3 bytes."""
    if not 0 <= channel_index < channel_count:
        raise InvalidInputError(f"channel {channel_index} out of range")
    total = channel_count * n_samples
    raw = np.fromfile(path, dtype=np.uint8)
    needed = (total * 3 + 1) // 2
    if raw.size < needed:
        raise TruncatedDataError(
            f"{path}: need {needed} bytes for {total} samples, have {raw.size}"
        )
    n_triples = (total + 1) // 2
    b = raw[: 3 * n_triples].reshape(-1, 3).astype(np.int32)
    first = ((b[:, 1] & 0x0F) << 8) | b[:, 0]
    second = ((b[:, 1] >> 4) << 8) | b[:, 2]
    samples = np.empty(2 * n_triples, dtype=np.int32)
    samples[0::2] = first
    samples[1::2] = second
    samples = samples[:total]
    samples[samples >= 2048] -= 4096
    return samples[channel_index::channel_count].copy()


def read_signal_16(path, channel_count, n_samples, channel_index) -> np.ndarray:
    """Decode format 16: interleaved little-endian 16-bit integers."""
    if not 0 <= channel_index < channel_count:
        raise InvalidInputError(f"channel {channel_index} out of range")
    total = channel_count * n_samples
    raw = np.fromfile(path, dtype="<i2")
    if raw.size < total:
        raise TruncatedDataError(
            f"{path}: need {total} samples, have {raw.size}"
        )
    return raw[: total].astype(np.int32)[channel_index::channel_count].copy()


def beat_code_table() -> dict:
    """Annotation code table {code: (symbol, is_beat)} from the data asset."""
    text = resources.files("ecgtda").joinpath("data/beat_codes.json").read_text()
    table = json.loads(text)
    return {int(k): (v["symbol"], v["beat"]) for k, v in table["codes"].items()}


def is_beat_symbol(symbol: str) -> bool:
    return symbol in _BEAT_SYMBOLS


def read_annotations(path) -> list:
    """Decode an MIT-format annotation file to [(sample_index, symbol)].

    Annotation times are cumulative increments; SKIP/NUM/SUB/CHN/AUX
    bookkeeping entries are consumed without emitting annotations, and
    decoding stops at the (0, 0) end marker.
    """
    table = _CODE_TABLE
    data = Path(path).read_bytes()
    out = []
    time = 0
    pos = 0
    while True:
        if pos + 2 > len(data):
            raise TruncatedDataError(f"{path}: no end marker before EOF")
        word = data[pos] | (data[pos + 1] << 8)
        pos += 2
        code = word >> 10
        payload = word & 0x3FF
        if word == 0:
            return out
        if code == _SKIP:
            if pos + 4 > len(data):
                raise TruncatedDataError(f"{path}: truncated SKIP payload")
            high = data[pos] | (data[pos + 1] << 8)
            low = data[pos + 2] | (data[pos + 3] << 8)
            pos += 4
            jump = (high << 16) | low
            if jump >= 1 << 31:
                jump -= 1 << 32
            time += jump
            if time < 0:
                raise ParseError(f"{path}: annotation time underflow")
        elif code in (_NUM, _SUB, _CHN):
            continue
        elif code == _AUX:
            length = payload + (payload & 1)  # padded to even
            if pos + length > len(data):
                raise ParseError(f"{path}: dangling AUX payload")
            pos += length
        else:
            time += payload
            if time < 0:
                raise ParseError(f"{path}: annotation time underflow")
            entry = table.get(code)
            if entry is not None:
                out.append((time, entry[0]))


def to_physical(raw, adc_gain, adc_zero, fs=1.0) -> Signal:
    """ADC counts to millivolts: (raw - zero) / gain."""
    if adc_gain == 0:
        raise InvalidInputError("adc_gain must be nonzero")
    return Signal((np.asarray(raw, dtype=np.float64) - adc_zero) / adc_gain, fs)


@dataclass(frozen=True)
class AnnotatedRecord:
    """One channel of a WFDB record with its beat annotations."""

    patient_id: str
    signal: Signal
    beat_annotations: tuple  # ((sample_index, symbol), ...)
    source_rate_hz: float
    adc_gain: float = DEFAULT_GAIN
    adc_zero: int = 0

    def __post_init__(self):
        idx = np.array([i for i, _ in self.beat_annotations], dtype=np.int64)
        if idx.size and (
            np.any(np.diff(idx) <= 0)
            or idx[0] < 0
            or idx[-1] >= len(self.signal)
        ):
            raise InvalidInputError(
                "annotation indices must be strictly increasing and in range"
            )
        if not self.source_rate_hz > 0:
            raise InvalidInputError("source_rate_hz must be positive")

    @property
    def beat_indices(self) -> np.ndarray:
        return np.array([i for i, _ in self.beat_annotations], dtype=np.int64)

    @property
    def beat_symbols(self) -> tuple:
        return tuple(s for _, s in self.beat_annotations)


def read_record(prefix, channel=0, annotation_ext="atr") -> AnnotatedRecord:
    """Load header + signal + annotations for a record path prefix.

    `prefix` is the path without extension (e.g. ".../100"); annotations
    outside the signal span and non-beat symbols are dropped.
    """
    prefix = Path(prefix)
    header = read_header(prefix.with_suffix(".hea"))
    if not 0 <= channel < header.n_channels:
        raise InvalidInputError(f"channel {channel} out of range")
    spec = header.channels[channel]
    dat_path = prefix.parent / spec.file_name
    if spec.fmt == 212:
        raw = read_signal_212(dat_path, header.n_channels, header.n_samples, channel)
    else:
        raw = read_signal_16(dat_path, header.n_channels, header.n_samples, channel)
    signal = to_physical(raw, spec.adc_gain, spec.adc_zero, header.fs)
    annotations = read_annotations(prefix.with_suffix("." + annotation_ext))
    beats = tuple(
        (i, s) for i, s in annotations if is_beat_symbol(s) and i < len(signal)
    )
    return AnnotatedRecord(
        header.record_name, signal, beats, header.fs, spec.adc_gain, spec.adc_zero
    )


@dataclass(frozen=True)
class DatasetManifest:
    """Record inventory with per-database patient and label tallies."""

    entries: tuple  # ((record_path, database, patient_id), ...)
    patient_counts: dict  # database -> unique patients
    label_histograms: dict  # database -> {symbol: count}

    def to_json(self) -> str:
        return json.dumps(
            {
                "entries": [list(e) for e in self.entries],
                "patient_counts": self.patient_counts,
                "label_histograms": self.label_histograms,
            },
            indent=2,
            sort_keys=True,
        )


def build_manifest(records) -> DatasetManifest:
    """Summarize (path, database, AnnotatedRecord) triples."""
    entries = []
    patients = {}
    histograms = {}
    for path, database, record in records:
        entries.append((str(path), database, record.patient_id))
        patients.setdefault(database, set()).add(record.patient_id)
        hist = histograms.setdefault(database, {})
        for _, symbol in record.beat_annotations:
            hist[symbol] = hist.get(symbol, 0) + 1
    return DatasetManifest(
        tuple(entries),
        {db: len(ids) for db, ids in patients.items()},
        histograms,
    )


_CODE_TABLE = beat_code_table()
_BEAT_SYMBOLS = frozenset(sym for sym, beat in _CODE_TABLE.values() if beat)
