"""Phone error rate scoring.

Hypotheses are scored against reference phone sequences with unit-cost
edit distance. Reports carry the error breakdown and a confusion map so
corpus-level aggregation is a plain sum.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBaseline, EmptyInput, FormatError, UnknownPhone

DELETION = "<del>"
INSERTION = "<ins>"


def edit_ops(ref, hyp):
    """Unit-cost edit alignment of two symbol sequences.

    Returns (distance, ops) where ops is a list of
    ("match"|"sub"|"del"|"ins", ref_symbol|None, hyp_symbol|None) tuples
    in reference order. When several alignments are optimal the
    backtrace prefers match/substitution over deletion over insertion.
    """
    n, m = len(ref), len(hyp)
    d = np.zeros((n + 1, m + 1), dtype=np.int64)
    d[:, 0] = np.arange(n + 1)
    d[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = d[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            d[i, j] = min(sub, d[i - 1, j] + 1, d[i, j - 1] + 1)

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            kind = "match" if ref[i - 1] == hyp[j - 1] else "sub"
            ops.append((kind, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and d[i, j] == d[i - 1, j] + 1:
            ops.append(("del", ref[i - 1], None))
            i -= 1
        else:
            ops.append(("ins", None, hyp[j - 1]))
            j -= 1
    ops.reverse()
    return int(d[n, m]), ops


@dataclass
class PERReport:
    """Error accounting for one utterance (or a merged corpus).

    confusion maps (ref, hyp) pairs to counts; deletions appear as
    (ref, "<del>") and insertions as ("<ins>", hyp).
    """

    utterance_id: str
    n_ref: int
    ins: int
    dels: int
    sub: int
    confusion: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_ref < 0:
            raise FormatError(f"{self.utterance_id}: negative reference count")
        if min(self.ins, self.dels, self.sub) < 0:
            raise FormatError("negative error count")

    @property
    def errors(self) -> int:
        return self.ins + self.dels + self.sub

    @property
    def per(self) -> float:
        # An empty reference has no rate; report 0 for an empty
        # hypothesis and +inf when anything was inserted.
        if self.n_ref == 0:
            return 0.0 if self.errors == 0 else float("inf")
        return 100.0 * self.errors / self.n_ref


def align_edit(ref, hyp, utterance_id: str = "") -> PERReport:
    """Score one hypothesis phone sequence against its reference.

    Either sequence may be empty; an empty reference yields N=0.
    """
    _, ops = edit_ops(list(ref), list(hyp))
    ins = dels = sub = 0
    confusion = {}

    def bump(key):
        confusion[key] = confusion.get(key, 0) + 1

    for kind, r, h in ops:
        if kind == "ins":
            ins += 1
            bump((INSERTION, h))
        elif kind == "del":
            dels += 1
            bump((r, DELETION))
        else:
            sub += kind == "sub"
            bump((r, h))
    return PERReport(utterance_id, len(ref), ins, dels, sub, confusion)


def merge_reports(reports, utterance_id: str = "all") -> PERReport:
    """Pool utterance reports into one corpus report (counts just add)."""
    reports = list(reports)
    if not reports:
        raise EmptyInput("no reports to merge")
    confusion = {}
    for report in reports:
        for key, count in report.confusion.items():
            confusion[key] = confusion.get(key, 0) + count
    return PERReport(
        utterance_id,
        sum(r.n_ref for r in reports),
        sum(r.ins for r in reports),
        sum(r.dels for r in reports),
        sum(r.sub for r in reports),
        confusion,
    )


def per_increment(base_per: float, mod_per: float) -> float:
    """Relative PER change in percent: 100 * (mod - base) / base."""
    if base_per == 0:
        raise DegenerateBaseline("baseline PER is zero; relative increment undefined")
    return 100.0 * (mod_per - base_per) / base_per


def _error_counts(report: PERReport, fold: dict | None):
    """Per-phone deletion and insertion counts from a confusion map.

    Deletions charge the reference phone; insertions charge the
    hypothesis phone.
    """
    dels = {}
    ins = {}
    for (ref, hyp), count in report.confusion.items():
        if ref == INSERTION:
            phone = hyp if fold is None else fold.get(hyp, hyp)
            ins[phone] = ins.get(phone, 0) + count
        elif hyp == DELETION:
            phone = ref if fold is None else fold.get(ref, ref)
            dels[phone] = dels.get(phone, 0) + count
    return {"del": dels, "ins": ins}


def normalized_error_increment(
    base: PERReport,
    sys: PERReport,
    ref_occurrences: dict,
    grouping: dict,
    fold: dict | None = None,
) -> dict:
    """Added deletions and insertions per reference occurrence, by manner.

    For each phone, (sys errors - base errors) / occurrences is computed
    for deletions and insertions separately, then pooled within each
    manner as an occurrence-weighted mean. The result maps
    (manner, "del"|"ins") to that ratio. Phones with errors but zero
    occurrences accumulate raw added-error counts under ("unseen", kind).
    An optional fold map collapses phone labels before grouping.
    """
    if fold is not None:
        ref_occurrences = _fold_counts(ref_occurrences, fold)
    base_counts = _error_counts(base, fold)
    sys_counts = _error_counts(sys, fold)
    added = {}
    occ = {}
    for kind in ("del", "ins"):
        for phone in set(base_counts[kind]) | set(sys_counts[kind]):
            if phone not in ref_occurrences:
                raise UnknownPhone(f"no occurrence count for phone {phone!r}")
        # Error-free phones still weight the manner mean through their
        # occurrence counts.
        for phone, n in ref_occurrences.items():
            delta = sys_counts[kind].get(phone, 0) - base_counts[kind].get(phone, 0)
            if n == 0:
                if delta != 0:
                    key = ("unseen", kind)
                    added[key] = added.get(key, 0) + delta
                continue
            if phone not in grouping:
                raise UnknownPhone(f"no manner for phone {phone!r}")
            key = (grouping[phone], kind)
            added[key] = added.get(key, 0) + delta
            occ[key] = occ.get(key, 0) + n
    result = {}
    for key in sorted(added):
        if key[0] == "unseen":
            result[key] = float(added[key])
        else:
            result[key] = added[key] / occ[key]
    return result


def _fold_counts(counts: dict, fold: dict) -> dict:
    folded = {}
    for phone, count in counts.items():
        phone = fold.get(phone, phone)
        folded[phone] = folded.get(phone, 0) + count
    return folded


def write_report_csv(reports) -> str:
    lines = ["utterance_id,N,ins,del,sub,per"]
    for r in reports:
        lines.append(f"{r.utterance_id},{r.n_ref},{r.ins},{r.dels},{r.sub},{repr(r.per)}")
    return "\n".join(lines) + "\n"


def read_report_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "utterance_id,N,ins,del,sub,per":
        raise FormatError("missing report header")
    reports = []
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != 6:
            raise FormatError(f"bad report row {line!r}")
        try:
            n, ins, dels, sub = (int(f) for f in fields[1:5])
            per = float(fields[5])
        except ValueError:
            raise FormatError(f"bad report row {line!r}") from None
        report = PERReport(fields[0], n, ins, dels, sub)
        if abs(report.per - per) > 1e-9:
            raise FormatError(f"inconsistent per in row {line!r}")
        reports.append(report)
    return reports


def write_confusion_csv(report: PERReport) -> str:
    lines = ["ref,hyp,count"]
    for (ref, hyp), count in sorted(report.confusion.items()):
        lines.append(f"{ref},{hyp},{count}")
    return "\n".join(lines) + "\n"


def read_confusion_csv(text: str) -> dict:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "ref,hyp,count":
        raise FormatError("missing confusion header")
    confusion = {}
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != 3:
            raise FormatError(f"bad confusion row {line!r}")
        try:
            confusion[(fields[0], fields[1])] = int(fields[2])
        except ValueError:
            raise FormatError(f"bad confusion row {line!r}") from None
    return confusion
