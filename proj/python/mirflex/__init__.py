"""Music feature extraction: key, chords, tempo and beats, vocals.

Thin Python layer over the C++ core. Audio is handled as ``AudioBuffer``
objects; reports and score tables come back as plain dicts.
"""

import json
import os

from ._core import (
    CANONICAL_SAMPLE_RATE,
    AudioBuffer,
    MirflexError,
    beat_f_measure,
    catalog_query,
    catalog_tasks,
    classify_vocals,
    decode_wav,
    detect_chords,
    detect_key,
    estimate_tempo,
    extractor_ids,
    key_score,
    resample,
    run_pipeline,
    synth_click_track,
    synth_tone,
    tempo_accuracy,
    track_beats,
    vocal_features,
    wcsr,
    write_wav,
)
from ._core import evaluate as _evaluate


def error_kind(err):
    """Kind name of a MirflexError, e.g. "NotFound"."""
    return err.args[1] if len(err.args) > 1 else ""


def evaluate(report, annotations_dir):
    """Scores a report (dict or path to a report file) against a directory of
    annotation files."""
    if isinstance(report, (str, os.PathLike)):
        with open(report, encoding="utf-8") as f:
            text = f.read()
    else:
        text = json.dumps(report)
    return _evaluate(text, os.fspath(annotations_dir))


__all__ = [
    "CANONICAL_SAMPLE_RATE",
    "AudioBuffer",
    "MirflexError",
    "beat_f_measure",
    "catalog_query",
    "catalog_tasks",
    "classify_vocals",
    "decode_wav",
    "detect_chords",
    "detect_key",
    "error_kind",
    "estimate_tempo",
    "evaluate",
    "extractor_ids",
    "key_score",
    "resample",
    "run_pipeline",
    "synth_click_track",
    "synth_tone",
    "tempo_accuracy",
    "track_beats",
    "vocal_features",
    "wcsr",
    "write_wav",
]
