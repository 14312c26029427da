"""JSON and CSV report writers.

JSON is canonical: sorted keys, fixed indentation, no timestamps or host
details, so one config and seed always give the same bytes.  Non-finite
floats (an empty ball estimate is -inf) are written as the strings
"inf", "-inf" and "nan" to keep the output strict JSON.
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

SCHEMA_VERSION = 1


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def to_json(payload):
    return json.dumps(_clean(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(value):
    value = _clean(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return value


def write_text(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def envelope(command, config, result):
    settings = config.to_dict()
    settings.pop("out_dir")  # where reports go does not change what they say
    return {"schema_version": SCHEMA_VERSION, "command": command,
            "config": settings, "result": result}


@dataclass
class ComparisonReport:
    volume_rate: float
    bowen_value: float
    exact_value: float
    exact_note: str
    absolute_gaps: list
    gap_labels: tuple
    tolerance: float
    verdict: str

    def to_dict(self):
        return {"volume_rate": self.volume_rate, "bowen_value": self.bowen_value,
                "exact_value": self.exact_value, "exact_note": self.exact_note,
                "absolute_gaps": self.absolute_gaps, "gap_labels": list(self.gap_labels),
                "tolerance": self.tolerance, "verdict": self.verdict}


def compare(volume_rate, bowen_value, tolerance, exact_value=None, exact_note=None):
    """pass iff the two estimators agree within tolerance and, when an exact
    value is known, each of them is within tolerance of it."""
    gaps = [abs(volume_rate - bowen_value)]
    labels = ["volume-bowen"]
    if exact_value is not None:
        gaps += [abs(volume_rate - exact_value), abs(bowen_value - exact_value)]
        labels += ["volume-exact", "bowen-exact"]
    ok = all(g <= tolerance for g in gaps)
    return ComparisonReport(float(volume_rate), float(bowen_value),
                            None if exact_value is None else float(exact_value), exact_note,
                            [float(g) for g in gaps], tuple(labels), float(tolerance),
                            "pass" if ok else "fail")
