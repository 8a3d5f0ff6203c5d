"""File formats and core frame-indexed types.

Everything here is a pure parser/serializer: values are validated once at
construction, their arrays are frozen, and round-tripping any artifact
through its file format is the identity.
"""

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, MalformedAlignment, ParseError

NEG_INF = float("-inf")

MATRIX_MAGIC = b"LLM1"

GENDERS = ("F", "M", "unknown")

MANNERS = (
    "vowel",
    "glide",
    "fricative",
    "affricate",
    "nasal",
    "stop",
    "silence",
    "other",
)


@dataclass
class FrameTiming:
    """Analysis frame geometry. Defaults: 25 ms windows every 10 ms at 16 kHz."""

    sample_rate: int = 16000
    frame_length: int = 400
    frame_shift: int = 160

    def __post_init__(self):
        if self.frame_shift < 1:
            raise FormatError("frame_shift must be >= 1")
        if self.frame_length < self.frame_shift:
            raise FormatError("frame_length must be >= frame_shift")

    def sample_to_frame(self, sample: int) -> int:
        # Mid-frame boundaries round down; monotone in the sample index.
        return sample // self.frame_shift


@dataclass
class PhoneAlignment:
    """Contiguous, non-overlapping phone segments covering frames [0, T)."""

    utterance_id: str
    segments: list  # of (phone: str, start_frame: int, end_frame: int)
    speaker_id: str = "unknown"
    gender: str = "unknown"

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise MalformedAlignment(f"bad gender {self.gender!r}")
        if not self.segments:
            raise MalformedAlignment(f"{self.utterance_id}: alignment has no segments")
        self.segments = [(str(p), int(a), int(b)) for p, a, b in self.segments]
        prev_end = 0
        for phone, start, end in self.segments:
            if end <= start:
                raise MalformedAlignment(
                    f"{self.utterance_id}: empty segment {phone} [{start},{end})"
                )
            if start != prev_end:
                raise MalformedAlignment(
                    f"{self.utterance_id}: segment {phone} starts at {start}, expected {prev_end}"
                )
            prev_end = end

    @property
    def num_frames(self) -> int:
        return self.segments[-1][2]

    def phones(self) -> list:
        return [phone for phone, _, _ in self.segments]


@dataclass
class ScoreMatrix:
    """T x S per-frame, per-senone log-likelihoods. NEG_INF is the only
    permitted non-finite value and is absorbing in sums."""

    utterance_id: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise FormatError(f"score matrix must be T x S with T,S >= 1, got {values.shape}")
        bad = ~(np.isfinite(values) | (values == NEG_INF))
        if bad.any():
            t, s = np.argwhere(bad)[0]
            raise FormatError(f"non-finite non-sentinel value at frame {t}, senone {s}")
        values = values.copy() if values.flags.writeable else values
        values.setflags(write=False)
        self.values = values

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def S(self) -> int:
        return self.values.shape[1]


@dataclass
class FrameMask:
    """Per-frame drop indicator; dropped[t] == True means g(t) = 1."""

    dropped: np.ndarray

    def __post_init__(self):
        dropped = np.asarray(self.dropped, dtype=bool)
        if dropped.ndim != 1 or dropped.shape[0] < 1:
            raise FormatError("mask needs at least one frame")
        dropped = dropped.copy() if dropped.flags.writeable else dropped
        dropped.setflags(write=False)
        self.dropped = dropped

    @property
    def T(self) -> int:
        return self.dropped.shape[0]

    @property
    def n_dropped(self) -> int:
        return int(self.dropped.sum())

    @property
    def drop_rate(self) -> float:
        return self.n_dropped / self.T

    def dropped_frames(self) -> np.ndarray:
        return np.flatnonzero(self.dropped)

    def kept_frames(self) -> np.ndarray:
        return np.flatnonzero(~self.dropped)


def parse_alignment(
    text: str,
    timing: FrameTiming | None = None,
    unit: str = "frames",
    utterance_id: str = "",
    speaker_id: str = "unknown",
    gender: str = "unknown",
) -> PhoneAlignment:
    """Parse "start end phone" lines into a frame-indexed PhoneAlignment.

    With unit="samples" both endpoints are converted once via
    floor(b / frame_shift); everything downstream is frame-synchronous.
    """
    if unit not in ("frames", "samples"):
        raise ParseError(f"unknown unit {unit!r}")
    if unit == "samples" and timing is None:
        timing = FrameTiming()
    segments = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"line {lineno}: expected 'start end phone', got {line!r}")
        try:
            start, end = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer boundary in {line!r}") from None
        if unit == "samples":
            start = timing.sample_to_frame(start)
            end = timing.sample_to_frame(end)
        segments.append((fields[2], start, end))
    return PhoneAlignment(utterance_id, segments, speaker_id=speaker_id, gender=gender)


def format_alignment(alignment: PhoneAlignment) -> str:
    """Serialize an alignment back to "start end phone" lines (frame unit)."""
    return "\n".join(f"{a} {b} {p}" for p, a, b in alignment.segments)


def write_score_matrix(matrix: ScoreMatrix) -> bytes:
    """Binary layout: magic "LLM1", u32-LE T, u32-LE S, T*S f64-LE row-major."""
    header = MATRIX_MAGIC + struct.pack("<II", matrix.T, matrix.S)
    return header + matrix.values.astype("<f8").tobytes(order="C")


def read_score_matrix(data: bytes, utterance_id: str = "") -> ScoreMatrix:
    if len(data) < 12:
        raise FormatError(f"matrix payload truncated at {len(data)} bytes")
    if data[:4] != MATRIX_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MATRIX_MAGIC!r}")
    t, s = struct.unpack("<II", data[4:12])
    expected = 12 + 8 * t * s
    if len(data) != expected:
        raise FormatError(f"expected {expected} bytes for {t}x{s} matrix, got {len(data)}")
    if t < 1 or s < 1:
        raise FormatError(f"matrix must be at least 1x1, header says {t}x{s}")
    values = np.frombuffer(data, dtype="<f8", offset=12).reshape(t, s)
    return ScoreMatrix(utterance_id, values)


def write_score_matrix_text(matrix: ScoreMatrix) -> str:
    """Text layout: header "T S", then T rows of S shortest-round-trip floats."""
    lines = [f"{matrix.T} {matrix.S}"]
    for row in matrix.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def read_score_matrix_text(text: str, utterance_id: str = "") -> ScoreMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise FormatError(f"bad matrix header {lines[0]!r}")
    try:
        t, s = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError(f"bad matrix header {lines[0]!r}") from None
    if len(lines) - 1 != t:
        raise FormatError(f"expected {t} rows, got {len(lines) - 1}")
    values = np.empty((t, s), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != s:
            raise FormatError(f"row {i}: expected {s} values, got {len(fields)}")
        try:
            values[i] = [float(f) for f in fields]
        except ValueError:
            raise FormatError(f"row {i}: unparseable float in {line!r}") from None
    return ScoreMatrix(utterance_id, values)


def write_mask(mask: FrameMask) -> str:
    """One line per frame: "t 0|1" where 1 marks a dropped frame."""
    return "\n".join(f"{t} {int(d)}" for t, d in enumerate(mask.dropped))


def read_mask(text: str) -> FrameMask:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2 or fields[1] not in ("0", "1"):
            raise FormatError(f"line {lineno}: expected 't 0|1', got {line!r}")
        try:
            t = int(fields[0])
        except ValueError:
            raise FormatError(f"line {lineno}: bad frame index in {line!r}") from None
        if t in entries:
            raise FormatError(f"duplicate frame index {t}")
        entries[t] = fields[1] == "1"
    if not entries:
        raise FormatError("empty mask")
    if sorted(entries) != list(range(len(entries))):
        missing = sorted(set(range(max(entries) + 1)) - set(entries))
        raise FormatError(f"frame indices not contiguous from 0; missing {missing}")
    return FrameMask(np.array([entries[t] for t in range(len(entries))], dtype=bool))


def write_manner_table(manners: dict) -> str:
    return "\n".join(f"{phone} {manner}" for phone, manner in sorted(manners.items()))


def read_manner_table(text: str) -> dict:
    """Parse "phone manner" lines; manner names outside the inventory are a
    load-time error."""
    table = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise FormatError(f"line {lineno}: expected 'phone manner', got {line!r}")
        phone, manner = fields
        if manner not in MANNERS:
            raise FormatError(f"line {lineno}: unknown manner {manner!r}")
        if phone in table:
            raise FormatError(f"line {lineno}: duplicate phone {phone!r}")
        table[phone] = manner
    return table


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via temp file + rename so readers never observe partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
