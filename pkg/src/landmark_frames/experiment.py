"""End-to-end experiment driver.

A run decodes one corpus under the untouched baseline plus any number
of strategies, scores every decode against the reference alignments,
and writes a report directory: the summary CSV, per-strategy error
breakdowns, decoded sequences, drop masks, transformed-matrix
checksums, significance tests, a plot, and checksums. Reruns with the
same config are byte-identical.
"""

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus_io import (
    FrameTiming,
    atomic_write_text,
    parse_alignment,
    read_manner_table,
    read_score_matrix,
    write_mask,
    write_score_matrix,
)
from .decoder import read_transition_model, viterbi
from .errors import EmptyInput, InvalidConfig, LandmarkFramesError
from .landmarks import AnnotationConfig, annotate, landmark_frames
from .scoring import align_edit, merge_reports, per_increment, write_confusion_csv, write_report_csv
from .stats import cv_folds, summarize_cv, welch_t, wilcoxon_signed_rank, write_stats_csv
from .strategy import adjust_mask_to_rate, apply_replacement, apply_weights, parse_strategy, realize_strategy
from .synth import SynthConfig, gen_corpus

REPORT_COLUMNS = ("strategy", "drop_rate", "per", "delta_per", "mean", "stdev", "p_wilcoxon", "p_t")

BASELINE = "identity"

SWEEP_PARAMETERS = ("overweight", "drop_rate")

REPORT_FORMATS = ("csv", "svg")

# Stream labels keep every rng derivation independent of scheduling.
_STREAM_FOLDS = 1
_STREAM_STRATEGY = 2
_STREAM_ADJUST = 3


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    """One experiment: a corpus and the strategies to decode it under.

    The baseline is always the untouched matrices; comparison names the
    strategy that significance tests pair against (default: baseline).
    """

    seed: int = 0
    strategies: list = field(default_factory=list)
    comparison: str | None = None
    folds: int = 10
    cv_seed: int | None = None
    beam: float | None = None
    annotation: str = "boundary"
    widen_radius: int = 0
    merge_mc: bool = True
    formats: list = field(default_factory=lambda: list(REPORT_FORMATS))
    tag: str | None = None
    synth: SynthConfig = field(default_factory=SynthConfig)
    data_dir: str | None = None

    def __post_init__(self):
        if self.seed < 0:
            raise InvalidConfig("seed must be >= 0")
        if self.folds < 2:
            raise InvalidConfig("folds must be >= 2")
        if self.beam is not None and self.beam <= 0:
            raise InvalidConfig("beam must be positive")
        # Reuses the annotation validation for mode and radius.
        AnnotationConfig(self.annotation, self.widen_radius, self.merge_mc)
        if not self.formats:
            raise InvalidConfig("formats must not be empty")
        for fmt in self.formats:
            if fmt not in REPORT_FORMATS:
                raise InvalidConfig(f"unknown report format {fmt!r}")
        # Validate strategy strings eagerly so config errors fail fast.
        for s in self.strategies:
            parse_strategy(s)
        if self.comparison is not None and self.comparison != BASELINE:
            if self.comparison not in self.strategies:
                raise InvalidConfig(f"comparison {self.comparison!r} is not a configured strategy")


def load_experiment_config(text: str) -> ExperimentConfig:
    """Parse the JSON experiment description."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"config is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise InvalidConfig("config must be a JSON object")
    known = {
        "seed", "strategies", "comparison", "folds", "cv_seed", "beam",
        "annotation", "widen_radius", "merge_mc", "formats", "tag",
        "synth", "data_dir",
    }
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in raw.items() if k != "synth"}
    if "synth" in raw:
        if not isinstance(raw["synth"], dict):
            raise InvalidConfig("synth must be a JSON object")
        try:
            kwargs["synth"] = SynthConfig(**raw["synth"])
        except TypeError as e:
            raise InvalidConfig(f"bad synth options: {e}") from None
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as e:
        raise InvalidConfig(f"bad config: {e}") from None


@dataclass
class Corpus:
    model: object
    manner_table: dict
    utterances: list


@dataclass
class _Utterance:
    alignment: object
    matrix: object


def load_corpus_dir(path: str) -> Corpus:
    """Load a decoding corpus from a directory.

    Expects model.tm, manners.txt, and per-utterance <stem>.align plus
    <stem>.llm pairs; speakers.tsv ("stem speaker gender") is optional
    and defaults every utterance to its own F speaker.
    """
    def read(name):
        with open(os.path.join(path, name), encoding="utf-8") as fh:
            return fh.read()

    model = read_transition_model(read("model.tm"))
    manner_table = read_manner_table(read("manners.txt"))
    speakers = {}
    if os.path.exists(os.path.join(path, "speakers.tsv")):
        for line in read("speakers.tsv").splitlines():
            fields = line.split()
            if len(fields) == 3:
                speakers[fields[0]] = (fields[1], fields[2])
    stems = sorted(
        os.path.splitext(name)[0]
        for name in os.listdir(path)
        if name.endswith(".align")
    )
    if not stems:
        raise InvalidConfig(f"no .align files in {path}")
    utterances = []
    for stem in stems:
        speaker, gender = speakers.get(stem, (stem, "F"))
        alignment = parse_alignment(
            read(f"{stem}.align"), FrameTiming(), "frames", stem, speaker, gender
        )
        with open(os.path.join(path, f"{stem}.llm"), "rb") as fh:
            matrix = read_score_matrix(fh.read(), stem)
        utterances.append(_Utterance(alignment, matrix))
    return Corpus(model, manner_table, utterances)


@dataclass
class StrategyOutcome:
    """One summary row plus the per-utterance details behind it."""

    strategy: str
    drop_rate: float | None = None
    per: float | None = None
    delta_per: float | None = None
    mean: float | None = None
    stdev: float | None = None
    p_wilcoxon: float | None = None
    p_t: float | None = None
    error: str | None = None
    value: float | None = None  # swept parameter value, if any
    reports: list | None = None
    decodes: list | None = None  # (utterance_id, phones)
    masks: list | None = None  # (utterance_id, FrameMask)
    checksums: list | None = None  # (utterance_id, transformed matrix sha256)
    stat_results: list = field(default_factory=list)


def _pipeline_one(task):
    """Replace, weight, decode, and score one utterance (worker-safe)."""
    matrix, mask, weights, method, model, beam, ref_phones, silence, utterance_id = task
    modified = apply_replacement(matrix, mask, method)
    modified = apply_weights(modified, weights)
    checksum = hashlib.sha256(write_score_matrix(modified)).hexdigest()
    result = viterbi(modified, model, beam=beam)
    hyp = [p for p in result.phones if p not in silence]
    ref = [p for p in ref_phones if p not in silence]
    report = align_edit(ref, hyp, utterance_id)
    return report, hyp, checksum


def _silence_phones(manner_table: dict) -> frozenset:
    return frozenset(p for p, m in manner_table.items() if m == "silence")


def _protection_frames(spec, landmarks, num_frames, default_radius):
    """Landmark frames a rate adjustment must not start dropping."""
    radii = [
        params.get("r", default_radius)
        for kind, params in spec.parts
        if kind in ("landmark", "hybrid", "overweight") or (kind == "random" and "match" in params)
    ]
    if not radii or landmarks is None:
        return ()
    return landmark_frames(landmarks, num_frames, max(radii))


def _run_strategy(
    raw, corpus, landmark_sets, config, stream_index, executor, rep=0, adjust_rate=None
):
    spec = parse_strategy(raw)
    silence = _silence_phones(corpus.manner_table)
    tasks = []
    masks = []
    for ui, utt in enumerate(corpus.utterances):
        rng = None
        if spec.needs_rng():
            rng = np.random.default_rng((config.seed, _STREAM_STRATEGY, rep, stream_index, ui))
        mask, weights = realize_strategy(
            spec, utt.matrix.T, landmarks=landmark_sets[ui], rng=rng,
            default_radius=config.widen_radius,
        )
        if adjust_rate is not None:
            target_n = int(np.floor(adjust_rate * mask.T + 0.5))
            protected = _protection_frames(spec, landmark_sets[ui], mask.T, config.widen_radius)
            mask = adjust_mask_to_rate(
                mask, target_n, protected,
                seed=_derive_seed(config.seed, _STREAM_ADJUST, rep, stream_index, ui),
            )
        masks.append((utt.alignment.utterance_id, mask))
        tasks.append(
            (utt.matrix, mask, weights, spec.method, corpus.model, config.beam,
             utt.alignment.phones(), silence, utt.alignment.utterance_id)
        )
    if executor is None:
        results = [_pipeline_one(t) for t in tasks]
    else:
        results = list(executor.map(_pipeline_one, tasks, chunksize=8))
    reports = [r for r, _, _ in results]
    decodes = [(t[8], phones) for t, (_, phones, _) in zip(tasks, results)]
    checksums = [(t[8], digest) for t, (_, _, digest) in zip(tasks, results)]
    drop_rate = float(np.mean([m.drop_rate for _, m in masks]))
    return StrategyOutcome(
        raw, drop_rate=drop_rate, reports=reports, decodes=decodes, masks=masks,
        checksums=checksums,
    )


def _utterance_folds(corpus, config):
    """Speaker-disjoint utterance groups from a gender-stratified split."""
    speakers = []
    gender = {}
    for utt in corpus.utterances:
        sid, g = utt.alignment.speaker_id, utt.alignment.gender
        if sid in gender:
            if gender[sid] != g:
                raise InvalidConfig(f"speaker {sid!r} has inconsistent gender labels")
        else:
            gender[sid] = g
            speakers.append((sid, g))
    seed = config.cv_seed if config.cv_seed is not None else _derive_seed(config.seed, _STREAM_FOLDS)
    spec = cv_folds(speakers, k=config.folds, seed=seed)
    folds = []
    for fold in spec.folds:
        members = set(fold)
        folds.append([
            utt.alignment.utterance_id
            for utt in corpus.utterances
            if utt.alignment.speaker_id in members
        ])
    return [f for f in folds if f]


def _fold_increments(folds, base_by_id, strat_by_id):
    """Relative PER increments per fold.

    Folds whose baseline slice has no errors are skipped: the relative
    increment is undefined there. The skip depends only on the baseline,
    so every strategy is summarized over the same fold subset.
    """
    increments = []
    for fold in folds:
        base = merge_reports([base_by_id[u] for u in fold], "fold")
        if base.per == 0.0:
            continue
        mod = merge_reports([strat_by_id[u] for u in fold], "fold")
        if mod.per == base.per:
            increments.append(0.0)
        else:
            increments.append(per_increment(base.per, mod.per))
    return increments


def compute_outcomes(
    config: ExperimentConfig,
    jobs: int = 1,
    rep: int = 0,
    adjust_rate: float | None = None,
    strategies=None,
):
    """Run the baseline and every strategy, attaching comparison stats.

    Returns (outcomes, corpus); outcomes[0] is the untouched baseline.
    A failing strategy yields a row with its error message instead of
    aborting the run; a failing baseline is fatal. adjust_rate, if
    given, renormalizes every strategy mask to that drop rate.
    """
    if config.data_dir is not None:
        corpus = load_corpus_dir(config.data_dir)
    else:
        corpus = gen_corpus(config.synth, config.seed)
    if strategies is None:
        strategies = list(config.strategies)

    specs = [parse_strategy(s) for s in strategies]
    need_landmarks = any(s.needs_landmarks() for s in specs) or adjust_rate is not None
    landmark_sets = [None] * len(corpus.utterances)
    if need_landmarks:
        ann = AnnotationConfig(config.annotation, config.widen_radius, config.merge_mc)
        landmark_sets = [
            annotate(utt.alignment, corpus.manner_table, ann) for utt in corpus.utterances
        ]

    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        baseline = _run_strategy(BASELINE, corpus, landmark_sets, config, 0, executor, rep=rep)
        baseline.delta_per = 0.0
        baseline.mean = 0.0
        baseline.stdev = 0.0
        base_merged = merge_reports(baseline.reports, "baseline")
        baseline.per = base_merged.per

        ids = [u.alignment.utterance_id for u in corpus.utterances]
        folds = _utterance_folds(corpus, config)
        base_by_id = {r.utterance_id: r for r in baseline.reports}

        outcomes = [baseline]
        details = {}
        for si, raw in enumerate(strategies, start=1):
            try:
                outcome = _run_strategy(
                    raw, corpus, landmark_sets, config, si, executor,
                    rep=rep, adjust_rate=adjust_rate,
                )
                merged = merge_reports(outcome.reports, "strategy")
                outcome.per = merged.per
                if merged.per == base_merged.per:
                    outcome.delta_per = 0.0
                else:
                    outcome.delta_per = per_increment(base_merged.per, merged.per)
                strat_by_id = {r.utterance_id: r for r in outcome.reports}
                increments = _fold_increments(folds, base_by_id, strat_by_id)
                if increments:
                    outcome.mean, outcome.stdev = summarize_cv(increments)
                details[id(outcome)] = (strat_by_id, increments)
            except LandmarkFramesError as e:
                outcome = StrategyOutcome(raw, error=str(e))
            outcomes.append(outcome)

        n_live_folds = sum(
            1 for fold in folds
            if merge_reports([base_by_id[u] for u in fold], "fold").per > 0.0
        )
        comparison = config.comparison if config.comparison is not None else BASELINE
        if comparison == BASELINE:
            comp = baseline
            comp_by_id = base_by_id
            comp_increments = [0.0] * n_live_folds
        else:
            comp = next(o for o in outcomes[1:] if o.strategy == comparison)
            comp_by_id, comp_increments = details.get(id(comp), (None, None))
        for outcome in outcomes[1:]:
            if outcome.error is not None or outcome is comp or comp.error is not None:
                continue
            strat_by_id, increments = details[id(outcome)]
            pairs = [(strat_by_id[u].errors, comp_by_id[u].errors) for u in ids]
            wilcoxon = wilcoxon_signed_rank(pairs)
            outcome.p_wilcoxon = wilcoxon.p
            outcome.stat_results.append(wilcoxon)
            if len(increments) >= 2 and len(comp_increments) >= 2:
                try:
                    t_result = welch_t(increments, comp_increments)
                    outcome.p_t = t_result.p
                    outcome.stat_results.append(t_result)
                except LandmarkFramesError:
                    outcome.p_t = None
    finally:
        if executor is not None:
            executor.shutdown()
    return outcomes, corpus


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def format_report_csv(outcomes, seed: int, tag: str | None = None) -> str:
    """Summary CSV; the errors column appears only when some row failed."""
    any_error = any(o.error for o in outcomes)
    header = ",".join(REPORT_COLUMNS + ("errors",) if any_error else REPORT_COLUMNS)
    lines = [f"# seed={seed}"]
    if tag is not None:
        lines.append(f"# tag={tag}")
    lines.append(header)
    for o in outcomes:
        cells = [
            o.strategy,
            _cell(o.drop_rate),
            _cell(o.per),
            _cell(o.delta_per),
            _cell(o.mean),
            _cell(o.stdev),
            _cell(o.p_wilcoxon),
            _cell(o.p_t),
        ]
        if any_error:
            cells.append(o.error or "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def format_plot_svg(outcomes, title: str = "relative PER change") -> str:
    """Minimal deterministic bar chart of delta PER per strategy."""
    rows = [(o.strategy, o.delta_per, o.stdev or 0.0) for o in outcomes if o.delta_per is not None]
    width, height = 640, 360
    margin, base_y = 60, 300
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{base_y}" x2="{width - 20}" y2="{base_y}" stroke="black"/>',
        f'<line x1="{margin}" y1="40" x2="{margin}" y2="{base_y}" stroke="black"/>',
    ]
    if rows:
        peak = max(max(abs(v) + s for _, v, s in rows), 1e-9)
        scale = 120.0 / peak
        zero_y = (base_y + 40) / 2
        slot = (width - margin - 40) / len(rows)
        parts.append(
            f'<line x1="{margin}" y1="{zero_y:.1f}" x2="{width - 20}" y2="{zero_y:.1f}" '
            f'stroke="gray" stroke-dasharray="4"/>'
        )
        for i, (label, value, stdev) in enumerate(rows):
            x = margin + 10 + i * slot
            bar_w = max(slot * 0.6, 4.0)
            top = zero_y - max(value, 0.0) * scale
            h = abs(value) * scale
            parts.append(
                f'<rect x="{x:.1f}" y="{top:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                f'fill="steelblue"/>'
            )
            if stdev > 0:
                cx = x + bar_w / 2
                y0 = zero_y - (value + stdev) * scale
                y1 = zero_y - (value - stdev) * scale
                parts.append(
                    f'<line x1="{cx:.1f}" y1="{y0:.1f}" x2="{cx:.1f}" y2="{y1:.1f}" '
                    f'stroke="black"/>'
                )
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{base_y + 16}" text-anchor="middle" '
                f'font-size="9">{_xml_escape(label)}</text>'
            )
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{top - 4:.1f}" text-anchor="middle" '
                f'font-size="9">{value:.2f}</text>'
            )
    else:
        parts.append(
            f'<text x="{width // 2}" y="{height // 2}" text-anchor="middle">no data</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_SWEEP_COLORS = ("steelblue", "firebrick", "seagreen", "darkorange", "purple", "teal")


def format_sweep_svg(rows, parameter: str, title: str | None = None) -> str:
    """Deterministic line chart: mean delta PER against the swept value."""
    series = {}
    for row in rows:
        if row.value is None or row.delta_per is None:
            continue
        series.setdefault(row.strategy, []).append((row.value, row.delta_per))
    width, height = 640, 360
    left, right, top, bottom = 60, 620, 40, 300
    if title is None:
        title = f"relative PER change vs {parameter}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{_xml_escape(title)}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    points = [p for pts in series.values() for p in pts]
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points] + [0.0]
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        x_span = (x_hi - x_lo) or 1.0
        y_span = (y_hi - y_lo) or 1.0

        def sx(v):
            return left + (v - x_lo) / x_span * (right - left)

        def sy(v):
            return bottom - (v - y_lo) / y_span * (bottom - top)

        zero_y = sy(0.0)
        parts.append(
            f'<line x1="{left}" y1="{zero_y:.1f}" x2="{right}" y2="{zero_y:.1f}" '
            f'stroke="gray" stroke-dasharray="4"/>'
        )
        for si, (label, pts) in enumerate(sorted(series.items())):
            color = _SWEEP_COLORS[si % len(_SWEEP_COLORS)]
            pts = sorted(pts)
            coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
            for x, y in pts:
                parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
            parts.append(
                f'<text x="{right - 4}" y="{top + 14 + 14 * si}" text-anchor="end" '
                f'font-size="10" fill="{color}">{_xml_escape(label)}</text>'
            )
        for value in sorted({p[0] for p in points}):
            parts.append(
                f'<text x="{sx(value):.1f}" y="{bottom + 16}" text-anchor="middle" '
                f'font-size="9">{value:g}</text>'
            )
    else:
        parts.append(
            f'<text x="{width // 2}" y="{height // 2}" text-anchor="middle">no data</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(
    outcomes,
    seed: int,
    out_dir: str,
    formats=REPORT_FORMATS,
    tag: str | None = None,
    stem: str = "report",
    svg_text: str | None = None,
):
    """Write the summary CSV (and optionally SVG) for a set of rows."""
    outcomes = list(outcomes)
    if not outcomes:
        raise EmptyInput("no rows to report")
    for fmt in formats:
        if fmt not in REPORT_FORMATS:
            raise InvalidConfig(f"unknown report format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        path = os.path.join(out_dir, f"{stem}.csv")
        atomic_write_text(path, format_report_csv(outcomes, seed, tag))
        written.append(path)
    if "svg" in formats:
        path = os.path.join(out_dir, f"{stem}.svg")
        atomic_write_text(path, svg_text if svg_text is not None else format_plot_svg(outcomes))
        written.append(path)
    return written


def _write_strategy_dir(out_dir: str, name: str, outcome: StrategyOutcome) -> list:
    sub = os.path.join(out_dir, name)
    os.makedirs(sub, exist_ok=True)
    written = []

    def emit(filename, text):
        path = os.path.join(sub, filename)
        atomic_write_text(path, text)
        written.append(path)

    emit("strategy.txt", outcome.strategy + "\n")
    if outcome.error is not None:
        emit("error.txt", outcome.error + "\n")
        return written
    emit("per_utterance.csv", write_report_csv(outcome.reports))
    emit("confusion.csv", write_confusion_csv(merge_reports(outcome.reports, name)))
    if outcome.stat_results:
        emit("stats.csv", write_stats_csv(outcome.stat_results))
    emit(
        "decode.txt",
        "\n".join(f"{uid} {' '.join(phones)}" for uid, phones in outcome.decodes) + "\n",
    )
    emit(
        "matrix_checksums.txt",
        "\n".join(f"{uid} {digest}" for uid, digest in outcome.checksums) + "\n",
    )
    mask_dir = os.path.join(sub, "masks")
    os.makedirs(mask_dir, exist_ok=True)
    for uid, mask in outcome.masks:
        path = os.path.join(mask_dir, f"{uid}.mask")
        atomic_write_text(path, write_mask(mask) + "\n")
        written.append(path)
    return written


def run_experiment(config: ExperimentConfig, out_dir: str, jobs: int = 1):
    """Execute a config and persist the report directory.

    Returns the outcome list (baseline first).
    """
    outcomes, _ = compute_outcomes(config, jobs=jobs)
    os.makedirs(out_dir, exist_ok=True)
    written = list(emit_report(outcomes, config.seed, out_dir, config.formats, config.tag))
    written += _write_strategy_dir(out_dir, "baseline", outcomes[0])
    for i, outcome in enumerate(outcomes[1:]):
        written += _write_strategy_dir(out_dir, f"strategy_{i:02d}", outcome)

    checksum_lines = []
    for path in sorted(written):
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        checksum_lines.append(f"{digest}  {os.path.relpath(path, out_dir)}")
    atomic_write_text(os.path.join(out_dir, "checksums.txt"), "\n".join(checksum_lines) + "\n")
    return outcomes


def _overweight_variant(raw: str, value: float) -> str:
    """Strategy string with every overweight factor replaced by value."""
    spec = parse_strategy(raw)
    hits = 0
    for kind, params in spec.parts:
        if kind == "hybrid":
            params["overweight"] = float(value)
            hits += 1
        elif kind == "overweight":
            params["factor"] = float(value)
            hits += 1
    if not hits:
        raise InvalidConfig(f"strategy {raw!r} has no overweight factor to sweep")
    return spec.render()


def sweep(
    config: ExperimentConfig,
    parameter: str,
    values,
    out_dir: str | None = None,
    repeats: int = 10,
    jobs: int = 1,
):
    """Sweep one knob over values, averaging each point over repeats.

    parameter "overweight" rewrites the factor of overweight/hybrid
    strategies; "drop_rate" renormalizes every strategy mask to the
    target rate via seeded adjustment. Rows hold repeat means; mean and
    stdev summarize the repeat spread. Writes sweep.csv / sweep.svg
    when out_dir is given.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidConfig(f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    values = [float(v) for v in values]
    if not values:
        raise InvalidConfig("sweep needs at least one value")
    if repeats < 1:
        raise InvalidConfig("repeats must be >= 1")
    if not config.strategies:
        raise InvalidConfig("sweep needs at least one strategy")
    if parameter == "drop_rate":
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"drop rate must lie in [0, 1], got {v}")
    else:
        for v in values:
            if v < 0.0:
                raise InvalidConfig(f"overweight factor must be >= 0, got {v}")
        # Fail fast if any strategy has nothing to sweep.
        for raw in config.strategies:
            _overweight_variant(raw, values[0])

    rows = []
    baseline_row = None
    for value in values:
        if parameter == "overweight":
            strategies = [_overweight_variant(raw, value) for raw in config.strategies]
            adjust_rate = None
        else:
            strategies = list(config.strategies)
            adjust_rate = value
        collected = {raw: [] for raw in strategies}
        errors = {raw: None for raw in strategies}
        for rep in range(repeats):
            outcomes, _ = compute_outcomes(
                config, jobs=jobs, rep=rep, adjust_rate=adjust_rate, strategies=strategies
            )
            if baseline_row is None:
                baseline_row = outcomes[0]
            for outcome in outcomes[1:]:
                if outcome.error is not None:
                    errors[outcome.strategy] = f"rep {rep}: {outcome.error}"
                else:
                    collected[outcome.strategy].append(outcome)
        for raw in strategies:
            if errors[raw] is not None:
                rows.append(StrategyOutcome(raw, error=errors[raw], value=value))
                continue
            runs = collected[raw]
            deltas = [o.delta_per for o in runs]
            mean, stdev = summarize_cv(deltas)
            rows.append(StrategyOutcome(
                raw,
                drop_rate=float(np.mean([o.drop_rate for o in runs])),
                per=float(np.mean([o.per for o in runs])),
                delta_per=mean,
                mean=mean,
                stdev=stdev,
                value=value,
            ))

    all_rows = [baseline_row] + rows
    if out_dir is not None:
        emit_report(
            all_rows, config.seed, out_dir, config.formats, config.tag,
            stem="sweep", svg_text=format_sweep_svg(rows, parameter),
        )
    return all_rows
