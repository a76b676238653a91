"""
Result files of a sweep.

Every file is written in a fixed row order with fixed float formatting, so a
rerun of the same plan reproduces them byte for byte.
"""

import csv
import io
import logging
from collections import defaultdict
from pathlib import Path

import numpy as np

from .errors import ReportError, StatisticsError
from .statistics import ci90, ols_fit
from .utils.json_save_load import dumps, load_object

logger = logging.getLogger(__name__)

RUNS_HEADER = ("system", "rq", "setup", "beta", "k", "mode", "seed",
               "unique", "tp", "tp_u", "score", "rejected", "wall_ms")
CURVE_HEADER = ("k", "unique_count", "tp", "tp_u", "score")
CI_HEADER = ("setup", "beta", "mean", "lo", "hi", "n")
BEST_K_HEADER = ("system", "beta", "best_k", "score")
TP_TPU_HEADER = ("system", "beta", "k", "tp", "tp_u", "above_diagonal")
FAILURES_HEADER = ("system", "rq", "setup", "beta", "replicate", "error")
REGRESSION_FEATURES = ("k", "mu", "system_size")


def fmt(value):
    return f"{value:.6f}"


def fmt_beta(beta):
    return f"{beta:g}"


def _csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")
    return path


def runs_rows(records):
    for r in records:
        if r.failed:
            continue
        yield (r.system, r.rq, r.setup, fmt_beta(r.beta), r.k, r.mode, r.seed,
               r.result.unique_count, fmt(r.result.tp), fmt(r.result.tp_u), fmt(r.result.score),
               r.result.rejected, "" if r.wall_ms is None else f"{r.wall_ms:.0f}")


def runs_csv(records):
    return _csv_text(RUNS_HEADER, runs_rows(records))


def curve_files(records):
    """
    {(system, beta): csv text} with the mean over replicates at every k.
    """

    groups = defaultdict(lambda: defaultdict(list))
    for r in records:
        if not r.failed:
            groups[(r.system, r.beta)][r.k].append(r.result)
    curves = {}
    for (system, beta), by_k in sorted(groups.items()):
        rows = []
        for k in sorted(by_k):
            results = by_k[k]
            unique = np.mean([e.unique_count for e in results])
            rows.append((k, f"{unique:g}", fmt(np.mean([e.tp for e in results])),
                         fmt(np.mean([e.tp_u for e in results])), fmt(np.mean([e.score for e in results]))))
        curves[(system, beta)] = _csv_text(CURVE_HEADER, rows)
    return curves


def ci_rows(records):
    """90% intervals of the scores per (setup, beta), pooled over systems, replicates and k"""

    groups = defaultdict(list)
    order = []
    for r in records:
        if r.failed:
            continue
        key = (r.setup, r.beta)
        if key not in groups:
            order.append(key)
        groups[key].append(r.result.score)
    rows = []
    for setup, beta in order:
        scores = groups[(setup, beta)]
        if len(scores) < 2:
            logger.warning("%s beta=%s: a single score, no interval", setup, fmt_beta(beta))
            continue
        ci = ci90(scores)
        rows.append((setup, fmt_beta(beta), fmt(ci.mean), fmt(ci.lo), fmt(ci.hi), ci.n))
    return rows


def best_k(records):
    """Per (system, beta) the k with the highest score (smallest k on ties) and the median of those"""

    best = {}
    for r in records:
        if r.failed:
            continue
        key = (r.system, r.beta)
        if key not in best or r.result.score > best[key][1] or (
                r.result.score == best[key][1] and r.k < best[key][0]):
            best[key] = (r.k, r.result.score)
    rows = [(system, fmt_beta(beta), k, fmt(s)) for (system, beta), (k, s) in sorted(best.items())]
    median = float(np.median([k for k, _ in best.values()])) if best else None
    return rows, median


def tp_tpu_rows(records):
    return [(r.system, fmt_beta(r.beta), r.k, fmt(r.result.tp), fmt(r.result.tp_u),
             int(r.result.tp_u > r.result.tp))
            for r in records if not r.failed]


def regression(records, squares_only=False):
    """
    Linear and quadratic fits of the score on k, mu(V_S) and |V_S|.
    A fit that cannot be computed is reported with its error instead.
    """

    ok = [r for r in records if not r.failed]
    X = np.array([[r.k, r.system_max_length, r.system_size] for r in ok], dtype=np.float64)
    y = np.array([r.result.score for r in ok])
    out = {"features": list(REGRESSION_FEATURES), "n": len(ok)}
    for expand in ("linear", "quadratic"):
        try:
            out[expand] = ols_fit(X, y, expand=expand, feature_names=REGRESSION_FEATURES,
                                  squares_only=squares_only).to_dict()
        except StatisticsError as ex:
            out[expand] = {"error": str(ex)}
    return out


def failure_rows(records):
    return [(r.system, r.rq, r.setup, fmt_beta(r.beta), r.replicate, r.error)
            for r in records if r.failed]


def curve_name(system, beta):
    return f"curve_{system}_beta{fmt_beta(beta)}.csv"


def write_report(records, out_dir, squares_only=False):
    """
    Writes runs.csv, ci.csv, regression.json, best_k.csv, tp_tpu.csv,
    failures.csv, records.json and one curve file per (system, beta).
    Returns the written paths.
    """

    records = list(records)
    if not records:
        raise ReportError("no records to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ok = [r for r in records if not r.failed]
    written = [
        _write(out_dir / "runs.csv", runs_csv(records)),
        _write(out_dir / "failures.csv", _csv_text(FAILURES_HEADER, failure_rows(records))),
        _write(out_dir / "records.json", dumps([r.to_dict() for r in records])),
    ]
    if not ok:
        logger.warning("every grid point failed; only runs.csv, failures.csv and records.json written")
        return written

    for (system, beta), text in curve_files(ok).items():
        written.append(_write(out_dir / curve_name(system, beta), text))
    written.append(_write(out_dir / "ci.csv", _csv_text(CI_HEADER, ci_rows(ok))))
    rows, median = best_k(ok)
    written.append(_write(out_dir / "best_k.csv", _csv_text(BEST_K_HEADER, rows)))
    written.append(_write(out_dir / "tp_tpu.csv", _csv_text(TP_TPU_HEADER, tp_tpu_rows(ok))))
    summary = regression(ok, squares_only)
    summary["best_k_median"] = median
    written.append(_write(out_dir / "regression.json", dumps(summary)))
    logger.info("report: %d rows, %d failures in %s", len(ok), len(records) - len(ok), out_dir)
    return written


def read_records(path):
    """RunRecords from a records.json written by write_report"""

    from .Experiments import RunRecord

    payload = load_object(path)
    if not isinstance(payload, list):
        raise ReportError(f"{path} does not hold a record list")
    try:
        return [RunRecord.from_dict(d) for d in payload]
    except (TypeError, KeyError) as ex:
        raise ReportError(f"malformed record in {path}: {ex}") from None
