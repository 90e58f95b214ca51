# MIT License
#
# Copyright (c) 2026 driftcheck contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.


from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, is_dataclass
from typing import Any

import numpy as np

from driftcheck.geometry import HypothesisCheck
from driftcheck.verify import CheckReport, EigenvalueStudy, VerificationReport

CSV_COLUMNS = ("level", "dofs", "lambda1", "order_estimate", "extrapolate")


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if is_dataclass(value):
        return _plain(asdict(value))
    return value


def hypothesis_dict(h: HypothesisCheck) -> dict:
    return {"name": h.name, "margin": h.margin, "pass": h.passed, "tolerance": h.tolerance, "strict": h.strict,
            "plan": h.plan}


def check_dict(check: CheckReport) -> dict:
    out = {
        "name": check.name,
        "verdict": check.verdict.value,
        "hypotheses": [hypothesis_dict(h) for h in check.hypotheses],
        "computed": check.computed,
        "bounds": check.bounds,
        "runtime_ms": check.runtime_ms,
    }
    if check.message is not None:
        out["message"] = check.message
    return out


def report_dict(report: VerificationReport) -> dict:
    return _plain({
        "scenario_id": report.scenario_id,
        "conventions": report.conventions,
        "checks": [check_dict(c) for c in report.checks],
    })


def report_json(report: VerificationReport) -> str:
    return json.dumps(report_dict(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report: VerificationReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(report_json(report))


def convergence_rows(study: EigenvalueStudy) -> list[dict]:
    rich = study.richardson
    return [{"level": lv.level, "dofs": lv.dofs, "lambda1": lv.lambda1, "order_estimate": rich.level_orders[i],
             "extrapolate": rich.level_extrapolates[i]} for i, lv in enumerate(study.levels)]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def convergence_csv(study: EigenvalueStudy) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in convergence_rows(study):
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_convergence_csv(study: EigenvalueStudy, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(convergence_csv(study))


def convergence_csv_from_report(report: VerificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("check",) + CSV_COLUMNS)
    for check in report.checks:
        levels = check.computed.get("levels")
        if not levels:
            continue
        orders = check.computed.get("level_orders") or [None] * len(levels)
        extrapolates = check.computed.get("level_extrapolates") or [None] * len(levels)
        for lv, order, extrapolate in zip(levels, orders, extrapolates):
            writer.writerow([check.name, lv["level"], lv["dofs"], _cell(float(lv["lambda1"])), _cell(order),
                             _cell(extrapolate)])
    return buf.getvalue()
