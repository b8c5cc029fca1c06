"""Battery report rendering: a fixed-width text table and a JSON document.

JSON layout (``format_version`` 1)::

    {
      "format": "spritz-battery-report",
      "format_version": 1,
      "config":  {...BatteryConfig.to_dict()...},
      "verdict": "Passed" | "Weak" | "Failed",
      "rows":    [row, ...],      # final rows, one per configured test
      "audit":   [row, ...],      # every run, reruns included, in execution order
      "seconds": float            # omitted when timing is disabled
    }

Each row holds ``test, tuple, variant, psamples, p_value, result, rerun,
streams`` (half-open index range of the streams read), ``not_applicable`` and,
with timing, ``seconds``.
"""
from __future__ import annotations

import json

from .battery import BatteryReport

REPORT_FORMAT = "spritz-battery-report"
REPORT_VERSION = 1

_COLUMNS = ("Test Name", "tuple", "psamples", "p-value", "Result")


def report_to_dict(report: BatteryReport, timing: bool = True) -> dict:
    doc = {
        "format": REPORT_FORMAT,
        "format_version": REPORT_VERSION,
        "config": report.config.to_dict(),
        "verdict": report.verdict,
        "rows": [r.to_dict(timing) for r in report.rows],
        "audit": [r.to_dict(timing) for r in report.audit],
    }
    if timing:
        doc["seconds"] = round(report.seconds, 6)
    return doc


def report_to_json(report: BatteryReport, timing: bool = True) -> str:
    return json.dumps(report_to_dict(report, timing), indent=2) + "\n"


def load_report(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != REPORT_FORMAT:
        raise ValueError("not a battery report")
    if doc.get("format_version") != REPORT_VERSION:
        raise ValueError(f"unsupported report version {doc.get('format_version')}")
    return doc


def render_table(doc: dict, audit: bool = False) -> str:
    """Text table in the column layout of the published results table.

    With ``audit=True`` every run is listed, so a Weak row is followed by its
    rerun.
    """
    cfg = doc["config"]
    rows = doc["audit"] if audit else doc["rows"]
    body = [(r["test"], str(r["tuple"]), str(r["psamples"]), f"{r['p_value']:.8f}", r["result"])
            for r in rows]
    widths = [max(len(c), *(len(b[n]) for b in body)) if body else len(c)
              for n, c in enumerate(_COLUMNS)]
    line = "  ".join("{:<%d}" % w for w in widths)
    out = [
        f"# generator={cfg['generator']} streams={cfg['streams']} "
        f"stream_bits={cfg['stream_bits']} psamples={cfg['psamples']} keys={cfg['key_source']}",
        line.format(*_COLUMNS),
        "  ".join("=" * w for w in widths),
    ]
    out.extend(line.format(*b).rstrip() for b in body)
    out.append(f"# verdict: {doc['verdict']}")
    return "\n".join(out) + "\n"
