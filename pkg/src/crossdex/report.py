"""Table rendering in the layout of the published accuracy and p-value tables."""
from __future__ import annotations

import csv
import io

from .harness import Comparison, ResultMatrix
from .metrics import format_pm
from .stats import WilcoxonResult

MAPE_DIGITS = 4
RMSE_DIGITS = 2
P_DIGITS = 5


class EmptyReportError(ValueError):
    pass


def _cell_text(matrix: ResultMatrix, model: str, train: str, test: str, metric: str) -> str:
    s = matrix.cell(model, train, test)
    if s is None:
        return "failed" if matrix.cell_records(model, train, test) else ""
    if metric == "mape":
        return format_pm(s.mean_mape, s.std_mape, MAPE_DIGITS)
    return format_pm(s.mean_rmse, s.std_rmse, RMSE_DIGITS)


def _render(header: list[str], rows: list[list[str]], fmt: str, title: str | None = None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    lines = [f"### {title}", ""] if title else []
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join("---" for _ in header) + "|")
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def accuracy_table(matrix: ResultMatrix, index: str, fmt: str = "md") -> str:
    """Self-trained (ablation) MAPE and RMSE of every model on one index."""
    rows = [[m, _cell_text(matrix, m, index, index, "mape"), _cell_text(matrix, m, index, index, "rmse")]
            for m in matrix.models if matrix.cell_records(m, index, index)]
    return _render(["Model", "MAPE", "RMSE"], rows, fmt, f"Accuracy of models on {index}")


def cross_table(matrix: ResultMatrix, model: str, metric: str = "mape", fmt: str = "md") -> str:
    """Rows: trained on the index; columns: tested on the index."""
    idx = matrix.indexes
    rows = [[train] + [_cell_text(matrix, model, train, test, metric) for test in idx] for train in idx]
    return _render(["Index"] + idx, rows, fmt,
                   f"{metric.upper()} of cross-trained {model} (rows: trained on, columns: tested on)")


def failure_counts(matrix: ResultMatrix) -> dict[tuple[str, str], int]:
    out: dict[tuple[str, str], int] = {}
    for r in matrix.failures:
        key = (r.key.model, r.key.train_index)
        out[key] = out.get(key, 0) + 1
    return out


def wilcoxon_rows(comparisons: list[Comparison]) -> list[list[str]]:
    def p(x: float) -> str:
        return f"{x:.{P_DIGITS}f}"

    return [[c.model, c.test_index, p(c.result.p_greater), p(c.result.p_less), p(c.result.p_two_sided)]
            for c in comparisons]


def wilcoxon_table(comparisons: list[Comparison], fmt: str = "csv", title: str | None = None) -> str:
    return _render(["model", "index", "greater", "less", "two_side"], wilcoxon_rows(comparisons), fmt, title)


def format_result(res: WilcoxonResult) -> str:
    return (f"V={res.statistic:g} n={res.n_effective} method={res.method} mu={res.mu:g} "
            f"greater={res.p_greater:.{P_DIGITS}f} less={res.p_less:.{P_DIGITS}f} "
            f"two_side={res.p_two_sided:.{P_DIGITS}f}")


def traces_for(matrix: ResultMatrix, model: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["train_index", "test_index", "session_id", "day", "actual", "forecast"])
    for t in matrix.traces:
        if t.key.model == model:
            w.writerow([t.key.train_index, t.key.test_index, t.key.session_id, t.day,
                        repr(t.actual), repr(t.forecast)])
    return buf.getvalue()


def full_report(matrix: ResultMatrix, fmt: str = "md") -> dict[str, str]:
    """File name -> content for every table of a result set."""
    if not matrix.records:
        raise EmptyReportError("result set contains no session records")
    ext = "md" if fmt == "md" else "csv"
    files = {}
    for index in matrix.indexes:
        if any(matrix.cell_records(m, index, index) for m in matrix.models):
            files[f"accuracy_{index}.{ext}"] = accuracy_table(matrix, index, fmt)
    for model in matrix.models:
        for metric in ("mape", "rmse"):
            files[f"cross_{metric}_{model}.{ext}"] = cross_table(matrix, model, metric, fmt)
        if any(t.key.model == model for t in matrix.traces):
            files[f"plot_{model}.csv"] = traces_for(matrix, model)
    fails = failure_counts(matrix)
    if fails:
        rows = [[m, tr, str(n)] for (m, tr), n in sorted(fails.items())]
        files[f"failures.{ext}"] = _render(["model", "train_index", "failed_runs"], rows, fmt, "Failed runs")
    return files
