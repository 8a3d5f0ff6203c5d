"""Pipeline helpers shared across test modules."""

import landmark_frames as lf


def silence_phones(manner_table):
    return frozenset(p for p, m in manner_table.items() if m == "silence")


def corpus_reports(corpus, transform=None):
    """Decode every utterance (optionally transformed) and score it."""
    silence = silence_phones(corpus.manner_table)
    reports = []
    for ui, utt in enumerate(corpus.utterances):
        matrix = utt.matrix if transform is None else transform(ui, utt)
        result = lf.viterbi(matrix, corpus.model)
        hyp = [
            p
            for p in lf.collapse_states(result.states, corpus.model.senone_phones)
            if p not in silence
        ]
        ref = [p for p in utt.alignment.phones() if p not in silence]
        reports.append(lf.align_edit(ref, hyp, utt.alignment.utterance_id))
    return reports


def corpus_per(corpus, transform=None):
    return lf.merge_reports(corpus_reports(corpus, transform)).per
