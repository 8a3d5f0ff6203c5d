"""Frame-synchronous Viterbi decoding over senone HMMs.

The decoder consumes a (possibly re-weighted) score matrix and a senone
transition model and returns the single best state path. Path score is

    score = init(s_1) + m(1, s_1) + sum_t [ trans(s_{t-1}, s_t) + m(t, s_t) ]

where m is the score matrix after any replacement and weighting. Ties
are broken toward the lowest senone index at every step, so the
returned path is deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .corpus_io import NEG_INF, ScoreMatrix
from .errors import BeamCollapse, FormatError, InvalidConfig, ShapeError, UnknownSenone

NORMALIZATION_TOL = 1e-6


@dataclass
class TransitionModel:
    """Senone-level HMM topology in the log domain.

    init: (S,) log start probabilities. trans: (S, S) log transition
    probabilities, trans[i, j] = log p(j | i). senone_phones maps each
    senone index to the phone it belongs to.
    """

    init: np.ndarray
    trans: np.ndarray
    senone_phones: list

    def __post_init__(self):
        init = np.asarray(self.init, dtype=np.float64)
        trans = np.asarray(self.trans, dtype=np.float64)
        if init.ndim != 1:
            raise ShapeError(f"init must be 1-d, got shape {init.shape}")
        s = init.shape[0]
        if trans.shape != (s, s):
            raise ShapeError(f"trans must be ({s}, {s}), got {trans.shape}")
        if len(self.senone_phones) != s:
            raise ShapeError(f"need {s} senone phone labels, got {len(self.senone_phones)}")
        for arr in (init, trans):
            if (~(np.isfinite(arr) | (arr == NEG_INF))).any():
                raise FormatError("transition model entries must be finite or -inf")
        if not (init > NEG_INF).any():
            raise FormatError("no senone can start a path")
        dead = ~((trans > NEG_INF).any(axis=1))
        if dead.any():
            raise FormatError(f"senone {int(np.flatnonzero(dead)[0])} has no successor")
        if abs(np.exp(init).sum() - 1.0) > NORMALIZATION_TOL:
            raise FormatError(f"init probabilities sum to {np.exp(init).sum()!r}, not 1")
        row_sums = np.exp(trans).sum(axis=1)
        off = np.flatnonzero(np.abs(row_sums - 1.0) > NORMALIZATION_TOL)
        if off.size:
            i = int(off[0])
            raise FormatError(f"transition row {i} sums to {row_sums[i]!r}, not 1")
        init = init.copy() if init.flags.writeable else init
        trans = trans.copy() if trans.flags.writeable else trans
        init.setflags(write=False)
        trans.setflags(write=False)
        self.init = init
        self.trans = trans
        self.senone_phones = [str(p) for p in self.senone_phones]

    @property
    def S(self) -> int:
        return self.init.shape[0]


@dataclass
class DecodeResult:
    utterance_id: str
    states: np.ndarray  # (T,) senone indices
    score: float
    phones: list  # collapsed phone sequence


def collapse_states(states, senone_phones, silence=()) -> list:
    """Map a senone path to its phone sequence.

    Consecutive identical phones merge first; labels in `silence` are
    then removed. Out-of-range senone indices raise UnknownSenone.
    """
    silence = frozenset(silence)
    phones = []
    for s in states:
        i = int(s)
        if not 0 <= i < len(senone_phones):
            raise UnknownSenone(f"senone index {i} outside [0, {len(senone_phones)})")
        phone = senone_phones[i]
        if not phones or phones[-1] != phone:
            phones.append(phone)
    return [p for p in phones if p not in silence]


def viterbi(
    matrix: ScoreMatrix,
    model: TransitionModel,
    weights: np.ndarray | None = None,
    beam: float | None = None,
) -> DecodeResult:
    """Best-path decode of one utterance.

    weights, if given, scale each frame's emission row (NEG_INF entries
    stay NEG_INF). beam, if given, prunes states whose partial score
    falls more than beam below the frame maximum. Pruning everything
    raises BeamCollapse, as does a model with no feasible path.
    """
    if matrix.S != model.S:
        raise ShapeError(f"matrix has {matrix.S} senones, model has {model.S}")
    if beam is not None and beam <= 0:
        raise InvalidConfig(f"beam must be positive, got {beam}")
    values = _weighted_values(matrix, weights)
    T, S = values.shape

    back = np.zeros((T, S), dtype=np.int64)
    delta = model.init + values[0]
    delta = _prune(delta, beam, matrix.utterance_id, 0)
    for t in range(1, T):
        cand = delta[:, None] + model.trans
        back[t] = np.argmax(cand, axis=0)  # first occurrence: lowest predecessor wins ties
        delta = cand[back[t], np.arange(S)] + values[t]
        delta = _prune(delta, beam, matrix.utterance_id, t)

    best = int(np.argmax(delta))
    score = float(delta[best])
    states = np.zeros(T, dtype=np.int64)
    states[T - 1] = best
    for t in range(T - 1, 0, -1):
        states[t - 1] = back[t, states[t]]
    return DecodeResult(
        matrix.utterance_id, states, score, collapse_states(states, model.senone_phones)
    )


def _weighted_values(matrix: ScoreMatrix, weights: np.ndarray | None) -> np.ndarray:
    if weights is None:
        return matrix.values
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (matrix.T,):
        raise ShapeError(f"weights shape {weights.shape} != ({matrix.T},)")
    if (weights < 0).any() or not np.isfinite(weights).all():
        raise InvalidConfig("weights must be finite and >= 0")
    values = matrix.values
    with np.errstate(invalid="ignore"):
        scaled = weights[:, None] * values
    return np.where(values == NEG_INF, NEG_INF, scaled)


def _prune(delta: np.ndarray, beam: float | None, utterance_id: str, t: int) -> np.ndarray:
    peak = delta.max()
    if peak == NEG_INF:
        raise BeamCollapse(f"{utterance_id}: no surviving state at frame {t}")
    if beam is None:
        return delta
    return np.where(delta >= peak - beam, delta, NEG_INF)


def sequence_score(
    matrix: ScoreMatrix,
    model: TransitionModel,
    states,
    weights: np.ndarray | None = None,
) -> float:
    """Recompute the path score of a given state sequence."""
    states = np.asarray(states, dtype=np.int64)
    if states.shape != (matrix.T,):
        raise ShapeError(f"state path length {states.shape} != frames {matrix.T}")
    if matrix.S != model.S:
        raise ShapeError(f"matrix has {matrix.S} senones, model has {model.S}")
    if states.size and ((states < 0) | (states >= model.S)).any():
        bad = states[(states < 0) | (states >= model.S)][0]
        raise UnknownSenone(f"senone index {int(bad)} outside [0, {model.S})")
    values = _weighted_values(matrix, weights)
    score = model.init[states[0]] + values[0, states[0]]
    for t in range(1, matrix.T):
        score = score + model.trans[states[t - 1], states[t]] + values[t, states[t]]
    return float(score)


def write_transition_model(model: TransitionModel) -> str:
    """Text layout: senone count, init row, S transition rows, then one
    "index phone" line per senone."""
    lines = [str(model.S)]
    lines.append(" ".join(repr(float(v)) for v in model.init))
    for row in model.trans:
        lines.append(" ".join(repr(float(v)) for v in row))
    for i, phone in enumerate(model.senone_phones):
        lines.append(f"{i} {phone}")
    return "\n".join(lines) + "\n"


def read_transition_model(text: str) -> TransitionModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty transition model")
    try:
        s = int(lines[0])
    except ValueError:
        raise FormatError(f"bad senone count {lines[0]!r}") from None
    if s < 1:
        raise FormatError(f"senone count must be >= 1, got {s}")
    if len(lines) != 2 + 2 * s:
        raise FormatError(f"expected {2 + 2 * s} lines for {s} senones, got {len(lines)}")

    def parse_row(line, lineno):
        fields = line.split()
        if len(fields) != s:
            raise FormatError(f"line {lineno}: expected {s} values, got {len(fields)}")
        try:
            return [float(f) for f in fields]
        except ValueError:
            raise FormatError(f"line {lineno}: unparseable float") from None

    init = parse_row(lines[1], 2)
    trans = [parse_row(lines[2 + i], 3 + i) for i in range(s)]
    phones = [None] * s
    for line in lines[2 + s:]:
        fields = line.split()
        if len(fields) != 2:
            raise FormatError(f"bad senone label line {line!r}")
        try:
            idx = int(fields[0])
        except ValueError:
            raise FormatError(f"bad senone index in {line!r}") from None
        if not (0 <= idx < s) or phones[idx] is not None:
            raise FormatError(f"senone index {idx} out of range or repeated")
        phones[idx] = fields[1]
    return TransitionModel(np.array(init), np.array(trans), phones)
