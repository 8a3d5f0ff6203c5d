"""Frame-drop masks, replacement methods, and emission weights.

A strategy decides which frames of a score matrix are dropped (a
FrameMask), what to write into the dropped rows before decoding (a
replacement method), and how surviving frames are weighted. Strategies
are described by compact strings such as

    identity
    regular:P=2,D=1,method=copy
    random:rate=0.5,method=fill_0
    random:match=keep,r=1,seed=7
    landmark:keep,r=1
    regular:P=3,D=2+landmark:keep,r=0
    hybrid:P=2,D=1,overweight=1.5
    overweight:factor=3.0,r=1

Parts joined by "+" are OR-combined frame-wise. The method= key picks
the replacement written into dropped rows (default copy).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .corpus_io import NEG_INF, FrameMask, ScoreMatrix
from .errors import InvalidConfig, InvalidPattern, ShapeError
from .landmarks import frame_map, landmark_frames

REPLACEMENT_METHODS = ("copy", "fill_0", "fill_const", "upsample")

STRATEGY_KINDS = ("identity", "regular", "random", "landmark", "hybrid", "overweight")

INTERP_TAPS = 17


def mask_identity(num_frames: int) -> FrameMask:
    return FrameMask(np.zeros(num_frames, dtype=bool))


def mask_regular(num_frames: int, period: int, drop: int) -> FrameMask:
    """Drop the first `drop` frames of every `period`-frame cycle."""
    if period < 2 or not (1 <= drop < period):
        raise InvalidPattern(f"regular mask needs 1 <= D < P with P >= 2, got P={period}, D={drop}")
    t = np.arange(num_frames)
    return FrameMask((t % period) < drop)


def regular_drop_count(num_frames: int, period: int, drop: int) -> int:
    """Closed-form count of dropped frames for a regular mask."""
    return (num_frames // period) * drop + min(num_frames % period, drop)


def mask_random(num_frames: int, n_drop: int, seed: int, protected=()) -> FrameMask:
    """Drop n_drop frames sampled uniformly without replacement.

    Protected frames are never dropped; asking for more drops than the
    unprotected pool holds is an InvalidPattern.
    """
    pool = np.flatnonzero(~frame_map(protected, num_frames))
    if not 0 <= n_drop <= pool.size:
        raise InvalidPattern(
            f"cannot drop {n_drop} of {pool.size} unprotected frames (T={num_frames})"
        )
    dropped = np.zeros(num_frames, dtype=bool)
    if n_drop:
        rng = np.random.default_rng(seed)
        dropped[rng.choice(pool, size=n_drop, replace=False)] = True
    return FrameMask(dropped)


def mask_landmark(frames, num_frames: int, regime: str) -> FrameMask:
    """keep: drop every frame outside `frames`; drop: drop exactly `frames`."""
    if regime not in ("keep", "drop"):
        raise InvalidPattern(f"landmark regime must be keep or drop, got {regime!r}")
    marked = frame_map(frames, num_frames)
    if regime == "keep" and not marked.any():
        warnings.warn("landmark keep with no landmark frames drops every frame")
    return FrameMask(marked if regime == "drop" else ~marked)


def mask_or(a: FrameMask, b: FrameMask) -> FrameMask:
    if a.T != b.T:
        raise ShapeError(f"mask lengths differ: {a.T} vs {b.T}")
    return FrameMask(a.dropped | b.dropped)


def mask_subtract(mask: FrameMask, protected) -> FrameMask:
    """Clear drops on the protected frames."""
    return FrameMask(mask.dropped & ~frame_map(protected, mask.T))


def adjust_mask_to_rate(mask: FrameMask, target_n: int, protected=(), seed: int = 0) -> FrameMask:
    """Randomly add or remove drops until the mask hits an exact count.

    Only unprotected frames change: the result is a superset of the
    input drops when the count grows and a subset when it shrinks, so
    matched-rate comparisons perturb the mask as little as possible.
    Unreachable targets raise InvalidPattern.
    """
    if not 0 <= target_n <= mask.T:
        raise InvalidPattern(f"cannot drop {target_n} of {mask.T} frames")
    prot = frame_map(protected, mask.T)
    delta = target_n - mask.n_dropped
    if delta == 0:
        return FrameMask(mask.dropped)
    dropped = mask.dropped.copy()
    rng = np.random.default_rng(seed)
    if delta > 0:
        pool = np.flatnonzero(~dropped & ~prot)
        if pool.size < delta:
            raise InvalidPattern(f"need {delta} more drops but only {pool.size} unprotected kept frames")
        dropped[rng.choice(pool, size=delta, replace=False)] = True
    else:
        pool = np.flatnonzero(dropped & ~prot)
        if pool.size < -delta:
            raise InvalidPattern(f"need {-delta} fewer drops but only {pool.size} unprotected drops")
        dropped[rng.choice(pool, size=-delta, replace=False)] = False
    return FrameMask(dropped)


@dataclass(frozen=True)
class InterpFilter:
    """Symmetric 17-tap interpolation filter tied to a drop period."""

    taps: np.ndarray
    period: int

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.shape != (INTERP_TAPS,):
            raise InvalidPattern(f"filter needs {INTERP_TAPS} taps, got shape {taps.shape}")
        if not np.isfinite(taps).all():
            raise InvalidPattern("filter taps must be finite")
        if self.period < 2:
            raise InvalidPattern(f"filter period must be >= 2, got {self.period}")
        k = np.arange(INTERP_TAPS) - INTERP_TAPS // 2
        if taps[k % self.period == 0].sum() != 1.0:
            raise InvalidPattern("taps on the retained coset must sum to exactly 1")
        object.__setattr__(self, "taps", taps)


def design_interp_filter(period: int) -> InterpFilter:
    """Windowed-sinc filter for a drop-1-in-period mask (drops t = 0 mod P).

    Cutoff pi/period, Hamming window, unit center tap with exact zeros on
    the rest of the retained coset, and the off-coset taps normalized so
    a constant input reconstructs exactly away from the edges.
    """
    if not 2 <= period <= 8:
        raise InvalidPattern(f"filter period must lie in [2, 8], got {period}")
    half = INTERP_TAPS // 2
    k = np.arange(-half, half + 1)
    h = np.sinc(k / period) * np.hamming(INTERP_TAPS)
    on_coset = k % period == 0
    h[on_coset] = 0.0
    h[half] = 1.0
    total = h[~on_coset].sum()
    if total <= 0.0:
        raise InvalidPattern(f"degenerate filter for period {period}")
    h[~on_coset] /= total
    return InterpFilter(h, period)


def _drop_coset_period(mask: FrameMask, interp: InterpFilter | None) -> int:
    """Period P of a drop-1-in-P mask (drops exactly t = 0 mod P)."""
    dropped = mask.dropped_frames()
    if interp is not None:
        period = interp.period
    elif dropped.size >= 2:
        gaps = np.unique(np.diff(dropped))
        if gaps.size != 1:
            raise InvalidPattern("upsample needs a regular drop-1-in-P mask")
        period = int(gaps[0])
    else:
        # A single drop at frame 0 is the P >= T degenerate case.
        period = mask.T
    expected = np.arange(0, mask.T, period)
    if dropped.size != expected.size or (dropped != expected).any():
        raise InvalidPattern("upsample needs drops at exactly t = 0 mod P")
    return period


def _fill_const_row(values: np.ndarray) -> np.ndarray:
    # Column means over every input frame, dropped rows included.
    return values.mean(axis=0)


def _upsample_rows(values: np.ndarray, mask: FrameMask, taps: np.ndarray) -> np.ndarray:
    out = values.copy()
    kept = mask.kept_frames()
    half = len(taps) // 2
    for t in mask.dropped_frames():
        window = kept[(kept >= t - half) & (kept <= t + half)]
        weights = taps[window - t + half]
        total = weights.sum()
        if window.size == 0 or total == 0.0:
            nearest = kept[np.argmin(np.abs(kept - t))]
            out[t] = values[nearest]
            continue
        gathered = values[window]
        impossible = (gathered == NEG_INF).any(axis=0)
        safe = np.where(gathered == NEG_INF, 0.0, gathered)
        # In-range renormalization keeps DC gain exactly 1 at the edges.
        row = (weights / total) @ safe
        row[impossible] = NEG_INF
        out[t] = row
    return out


def apply_replacement(
    matrix: ScoreMatrix,
    mask: FrameMask,
    method: str,
    interp: InterpFilter | None = None,
) -> ScoreMatrix:
    """Rewrite dropped rows of a score matrix; kept rows are untouched.

    copy: repeat the most recent kept row (leading drops fall back to
    fill_const rows). fill_0: zero log-likelihood. fill_const: per-senone
    mean over all input frames. upsample: windowed-sinc interpolation
    from kept frames; the mask must drop exactly t = 0 mod P, and an
    explicit filter must match that period.
    """
    if method not in REPLACEMENT_METHODS:
        raise InvalidPattern(f"unknown replacement method {method!r}")
    if interp is not None and method != "upsample":
        raise InvalidPattern(f"interpolation filter is only meaningful for upsample, not {method!r}")
    if mask.T != matrix.T:
        raise ShapeError(f"mask length {mask.T} != matrix frames {matrix.T}")
    values = matrix.values.copy()
    dropped = mask.dropped
    if not dropped.any():
        return ScoreMatrix(matrix.utterance_id, values)
    if method == "fill_0":
        values[dropped] = 0.0
    elif method == "fill_const":
        values[dropped] = _fill_const_row(matrix.values)
    elif method == "copy":
        fallback = _fill_const_row(matrix.values)
        last = None
        for t in range(matrix.T):
            if dropped[t]:
                values[t] = fallback if last is None else values[last]
            else:
                last = t
    else:
        period = _drop_coset_period(mask, interp)
        if interp is None:
            interp = design_interp_filter(period)
        values = _upsample_rows(matrix.values, mask, interp.taps)
    return ScoreMatrix(matrix.utterance_id, values)


def uniform_weights(num_frames: int) -> np.ndarray:
    return np.ones(num_frames, dtype=np.float64)


def landmark_weights(num_frames: int, frames, factor: float) -> np.ndarray:
    """Unit weights everywhere except the given frames, which get factor."""
    if factor < 0:
        raise InvalidPattern(f"weight factor must be >= 0, got {factor}")
    weights = np.ones(num_frames, dtype=np.float64)
    weights[frame_map(frames, num_frames)] = factor
    return weights


def apply_weights(matrix: ScoreMatrix, weights: np.ndarray) -> ScoreMatrix:
    """Scale each frame's log-likelihood row; NEG_INF entries stay NEG_INF."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (matrix.T,):
        raise ShapeError(f"weights shape {weights.shape} != ({matrix.T},)")
    if (weights < 0).any() or not np.isfinite(weights).all():
        raise InvalidConfig("weights must be finite and >= 0")
    values = matrix.values
    scaled = np.where(values == NEG_INF, NEG_INF, weights[:, None] * values)
    return ScoreMatrix(matrix.utterance_id, scaled)


@dataclass
class StrategySpec:
    """Parsed strategy string: OR-combined parts plus a replacement method."""

    raw: str
    parts: list  # of (kind, params dict)
    method: str = "copy"

    def needs_landmarks(self) -> bool:
        for kind, params in self.parts:
            if kind in ("landmark", "hybrid", "overweight"):
                return True
            if kind == "random" and "match" in params:
                return True
        return False

    def needs_rng(self) -> bool:
        return any(kind == "random" and "seed" not in params for kind, params in self.parts)

    def render(self) -> str:
        """Canonical strategy string that parses back to this spec."""
        order = ("mode", "P", "D", "n", "rate", "match", "overweight", "factor", "r", "seed")
        chunks = []
        for kind, params in self.parts:
            items = []
            for key in order:
                if key in params:
                    value = params[key]
                    if key == "mode":
                        items.append(str(value))
                    else:
                        items.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
            chunks.append(kind + (":" + ",".join(items) if items else ""))
        if self.method != "copy":
            chunks[0] += ("," if ":" in chunks[0] else ":") + f"method={self.method}"
        return "+".join(chunks)


def _convert(kind: str, key: str, value: str):
    converters = {
        ("regular", "P"): int,
        ("regular", "D"): int,
        ("random", "rate"): float,
        ("random", "n"): int,
        ("random", "seed"): int,
        ("random", "match"): str,
        ("random", "r"): int,
        ("landmark", "mode"): str,
        ("landmark", "r"): int,
        ("hybrid", "P"): int,
        ("hybrid", "D"): int,
        ("hybrid", "overweight"): float,
        ("hybrid", "r"): int,
        ("overweight", "factor"): float,
        ("overweight", "r"): int,
    }
    conv = converters.get((kind, key))
    if conv is None:
        raise InvalidPattern(f"unknown key {key!r} for strategy kind {kind!r}")
    try:
        return conv(value)
    except ValueError:
        raise InvalidPattern(f"bad value {value!r} for {kind}:{key}") from None


_REQUIRED_KEYS = {
    "identity": (),
    "regular": ("P", "D"),
    "random": (),
    "landmark": ("mode",),
    "hybrid": ("P", "D", "overweight"),
    "overweight": ("factor",),
}


def parse_strategy(text: str) -> StrategySpec:
    """Parse a strategy string; see the module docstring for the grammar."""
    raw = text.strip()
    if not raw:
        raise InvalidPattern("empty strategy string")
    parts = []
    method = None
    for chunk in raw.split("+"):
        chunk = chunk.strip()
        kind, _, argstr = chunk.partition(":")
        kind = kind.strip()
        if kind not in STRATEGY_KINDS:
            raise InvalidPattern(f"unknown strategy kind {kind!r}")
        params = {}
        if argstr.strip():
            for item in argstr.split(","):
                item = item.strip()
                if "=" in item:
                    key, _, value = item.partition("=")
                    key, value = key.strip(), value.strip()
                    if key == "method":
                        if method is not None and method != value:
                            raise InvalidPattern("conflicting method= settings")
                        if value not in REPLACEMENT_METHODS:
                            raise InvalidPattern(f"unknown replacement method {value!r}")
                        method = value
                    else:
                        params[key] = _convert(kind, key, value)
                elif kind == "landmark" and item in ("keep", "drop"):
                    params["mode"] = item
                else:
                    raise InvalidPattern(f"bad strategy token {item!r}")
        missing = [key for key in _REQUIRED_KEYS[kind] if key not in params]
        if missing:
            raise InvalidPattern(f"strategy {kind!r} missing {missing}")
        if kind == "landmark" and params["mode"] not in ("keep", "drop"):
            raise InvalidPattern(f"landmark mode must be keep or drop, got {params['mode']!r}")
        if kind == "random":
            sources = [key for key in ("rate", "n", "match") if key in params]
            if len(sources) != 1:
                raise InvalidPattern("random strategy needs exactly one of rate, n, or match")
            if "match" in params and params["match"] not in ("keep", "drop"):
                raise InvalidPattern(f"random match must be keep or drop, got {params['match']!r}")
            if "rate" in params and not 0.0 <= params["rate"] <= 1.0:
                raise InvalidPattern(f"rate must lie in [0, 1], got {params['rate']}")
        if kind in ("regular", "hybrid") and not (
            params["P"] >= 2 and 1 <= params["D"] < params["P"]
        ):
            raise InvalidPattern(
                f"{kind} needs 1 <= D < P with P >= 2, got P={params['P']}, D={params['D']}"
            )
        if kind == "hybrid" and params["overweight"] < 0:
            raise InvalidPattern(f"overweight must be >= 0, got {params['overweight']}")
        if kind == "overweight" and params["factor"] < 0:
            raise InvalidPattern(f"factor must be >= 0, got {params['factor']}")
        parts.append((kind, params))
    return StrategySpec(raw, parts, method if method is not None else "copy")


def realize_strategy(
    spec: StrategySpec,
    num_frames: int,
    landmarks=None,
    rng: np.random.Generator | None = None,
    default_radius: int = 0,
):
    """Materialize a strategy for one utterance.

    Returns (FrameMask, weights). Drops from all parts are OR-combined;
    weight factors multiply. Random parts without an explicit seed draw
    one from rng.
    """
    if spec.needs_landmarks() and landmarks is None:
        raise InvalidConfig(f"strategy {spec.raw!r} needs landmark annotations")
    if spec.needs_rng() and rng is None:
        raise InvalidConfig(f"strategy {spec.raw!r} needs an rng")
    mask = mask_identity(num_frames)
    weights = uniform_weights(num_frames)
    for kind, params in spec.parts:
        if kind == "identity":
            continue
        radius = params.get("r", default_radius)
        if kind == "regular":
            mask = mask_or(mask, mask_regular(num_frames, params["P"], params["D"]))
        elif kind == "random":
            if "n" in params:
                n_drop = params["n"]
            elif "rate" in params:
                n_drop = int(np.floor(params["rate"] * num_frames + 0.5))
            else:
                frames = landmark_frames(landmarks, num_frames, radius)
                n_drop = mask_landmark(frames, num_frames, params["match"]).n_dropped
            seed = params.get("seed")
            if seed is None:
                seed = int(rng.integers(0, 2**63))
            mask = mask_or(mask, mask_random(num_frames, n_drop, seed))
        elif kind == "landmark":
            frames = landmark_frames(landmarks, num_frames, radius)
            mask = mask_or(mask, mask_landmark(frames, num_frames, params["mode"]))
        elif kind == "hybrid":
            frames = landmark_frames(landmarks, num_frames, radius)
            regular = mask_regular(num_frames, params["P"], params["D"])
            mask = mask_or(mask, mask_subtract(regular, frames))
            weights = weights * landmark_weights(num_frames, frames, params["overweight"])
        else:
            frames = landmark_frames(landmarks, num_frames, radius)
            weights = weights * landmark_weights(num_frames, frames, params["factor"])
    return mask, weights
