"""Plain-text rendering of run artifacts."""
import json
from pathlib import Path
from typing import Any, Iterable

from pydantic import ValidationError

from core.dto.evaluation import EvalReport
from core.dto.report import RunReport
from core.dto.search import SearchTrace
from core.exceptions import PreconditionError
from services.dataset import BundleValidation


def _concepts(items: Iterable[str]) -> str:
    items = list(items)
    return ", ".join(items) if items else "-"


def format_attributes(rows: Iterable[dict[str, Any]], limit: int = 20) -> str:
    """Ranked attribute table."""
    rows = list(rows)
    if not rows:
        return "No attributes found"
    lines = [f"{'score':>6}  attribute"]
    for row in rows[:limit]:
        flag = " (long)" if row.get("flagged_long") else ""
        lines.append(f"{row['mean_divergence']:6.3f}  {row['text']}{flag}")
        if "description" in row:
            lines.append(f"        concepts: {_concepts(row['description'].get('key_concepts', []))}")
    if len(rows) > limit:
        lines.append(f"... {len(rows) - limit} more")
    return "\n".join(lines)


def format_run_report(report: RunReport) -> str:
    lines = [
        f"Models: {' vs '.join(report.models)}",
        f"Prompts: {report.n_prompts}, attributes ranked: {report.attributes_ranked}",
        "",
    ]
    if not report.discovered:
        lines.append("No divergent representations found")
    for i, item in enumerate(report.discovered, start=1):
        early = ", stopped early" if item.terminated_early else ""
        lines.extend([
            f"{i}. {item.attribute}  (divergence {item.mean_divergence:.3f})",
            f"   prompts: {item.description.text or '-'}",
            f"   concepts: {_concepts(item.description.key_concepts)}",
            f"   best sigma {item.best_sigma:.2f} at iteration {item.best_iteration}{early}; trace {item.trace_path}",
        ])
    if report.failures:
        lines.append("")
        lines.append("Failed attributes:")
        lines.extend(f"  {f.attribute}: {f.error}: {f.message}" for f in report.failures)
    if report.cache:
        lines.append("")
        lines.append("Cache entries: " + ", ".join(f"{k}={v}" for k, v in sorted(report.cache.items())))
    return "\n".join(lines)


def format_eval_report(report: EvalReport) -> str:
    lines = [
        f"Attribute score    top1 {report.attribute.top1:.3f}  top5 {report.attribute.top5:.3f}",
        f"Description score  top1 {report.description.top1:.3f}  top5 {report.description.top5:.3f}",
    ]
    for weights, value in sorted(report.kappa.items()):
        lines.append(f"Kappa ({weights}): {value:.3f}")
    lines.append("")
    for result in report.results:
        lines.append(
            f"- {result.truth.attribute}: attribute {result.attribute.top1:.1f}/{result.attribute.top5:.1f}, "
            f"description {result.description.top1:.1f}/{result.description.top5:.1f}; "
            f"predicted '{result.best_attribute or '-'}'"
        )
    return "\n".join(lines)


def format_trace(trace: SearchTrace) -> str:
    lines = [f"Search for '{trace.attribute}' ({trace.mode}), seed bank {trace.seed_div}/{trace.seed_non}"]
    for it in trace.iterations:
        marker = "*" if it.index == trace.best_index else " "
        fallback = " [previous description]" if it.description_fallback else ""
        lines.append(
            f"{marker}{it.index:2d}  sigma {it.sigma:.2f} ({it.n_div}/{it.n_can})  "
            f"{_concepts(it.description.key_concepts)}{fallback}"
        )
    if trace.terminated_early:
        lines.append("Stopped early")
    return "\n".join(lines)


def format_validation(directory: str, result: BundleValidation) -> str:
    verdict = "accepted" if result.accepted else "REJECTED"
    return (
        f"{directory}: {verdict}; diverging pairs {result.diverging_fraction:.2f}, "
        f"distractor false positives {result.distractor_rate:.3f}"
    )


def render_file(path: str | Path) -> str:
    """
    Render a report, evaluation report, search trace or attribute list.

    Raises:
        PreconditionError: If the file is not one of those artifacts
    """
    source = Path(path)
    if not source.is_file():
        raise PreconditionError(f"File not found: {source}")
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        raise PreconditionError(f"{source} is not JSON")

    if isinstance(data, list):
        return format_attributes(data)
    if isinstance(data, dict):
        # each artifact is recognized by its top-level key
        for marker, model, render in (
            ("discovered", RunReport, format_run_report),
            ("iterations", SearchTrace, format_trace),
            ("results", EvalReport, format_eval_report),
        ):
            if marker not in data:
                continue
            try:
                return render(model.model_validate(data))
            except ValidationError:
                break
    raise PreconditionError(f"{source} is not a run report, evaluation report or trace")
