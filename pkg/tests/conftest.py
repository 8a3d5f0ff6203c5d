import pytest

import landmark_frames as lf


@pytest.fixture(scope="session")
def small_corpus():
    return lf.gen_corpus(lf.SynthConfig(seed=11, n_utterances=8, n_speakers=4))
