"""
Module: formatters.py
Description: Rendering of evaluation reports, bucket statistics and manifests

Percentages are shown with one decimal, rounded half up (43.05 -> 43.1) the
way published tables round, not with Python's round-half-even.

External Dependencies:
- rich: https://rich.readthedocs.io/

Sample Input:
>>> report = EvalReport.from_per_class({"cat": 0.5, "dog": 0.25})

Expected Output:
>>> format_percent(report.global_class)
'37.5'

Example Usage:
>>> console.print(report_table(report))
>>> atomic_write_text(path, render_text(report_table(report)))
"""

# hashseg/formatters.py
import io
from decimal import ROUND_HALF_UP, Decimal
from typing import Any

from rich.console import Console
from rich.table import Table

from .core.lsh import BucketStats
from .core.models import InstanceMask
from .evaluation import EvalReport
from .schemas import PredictionRecord

TEXT_WIDTH = 400


def format_percent(value: float) -> str:
    """Ratio in [0, 1] as a percentage with one decimal, half up"""
    # six decimals absorb binary noise such as 43.049999999999997
    scaled = Decimal(f"{value * 100:.6f}")
    return str(scaled.quantize(Decimal('0.1'), rounding=ROUND_HALF_UP))


def report_table(report: EvalReport) -> Table:
    """Per-class columns and a Global column, one row per Jaccard level"""
    mode = "class-aware" if report.class_aware else "class-agnostic"
    table = Table(title=f"Per-class and global Jaccard index ({mode})")
    table.add_column("Level", style="cyan", no_wrap=True)
    for label in report.classes:
        table.add_column(label, justify="right")
    table.add_column("Global", justify="right", style="bold green")

    table.add_row("Instance level",
                  *(format_percent(report.per_class_instance[c]) for c in report.classes),
                  format_percent(report.global_instance))
    table.add_row("Class level",
                  *(format_percent(report.per_class_class[c]) for c in report.classes),
                  format_percent(report.global_class))
    table.caption = (f"Recall at overlap {report.overlap_threshold:g}: {format_percent(report.recall_at_half)}"
                     f" ({report.total_instances} instances)")
    return table


def render_text(table: Table) -> str:
    """Plain aligned text of a rich table"""
    buffer = io.StringIO()
    Console(file=buffer, width=TEXT_WIDTH, color_system=None, force_terminal=False).print(table)
    return '\n'.join(line.rstrip() for line in buffer.getvalue().splitlines()) + '\n'


def report_payload(report: EvalReport) -> dict[str, Any]:
    """JSON body of an evaluation report: raw ratios plus the rounded percentages"""
    payload = report.to_dict()
    payload['formatted'] = {
        'instance_level': {c: format_percent(report.per_class_instance[c]) for c in report.classes},
        'class_level': {c: format_percent(report.per_class_class[c]) for c in report.classes},
        'global_instance': format_percent(report.global_instance),
        'global_class': format_percent(report.global_class),
        'recall': format_percent(report.recall_at_half),
    }
    return payload


def bucket_table(stats: BucketStats, title: str) -> Table:
    table = Table(title=title)
    table.add_column("Table", style="cyan", justify="right")
    table.add_column("Buckets", justify="right")
    table.add_column("Max occupancy", justify="right", style="yellow")
    table.add_column("Mean occupancy", justify="right")
    for t in stats.tables:
        table.add_row(str(t.table), str(t.buckets), str(t.max_occupancy), f"{t.mean_occupancy:.2f}")
    table.caption = f"{stats.size} codes, k={stats.k}, l={stats.l}"
    return table


def histogram_table(stats: BucketStats) -> Table:
    table = Table(title="Bucket occupancy histogram (all tables)")
    table.add_column("Occupancy", style="cyan", justify="right")
    table.add_column("Buckets", justify="right", style="green")
    for size, count in stats.histogram.items():
        table.add_row(str(size), str(count))
    return table


def bucket_payload(stats: BucketStats) -> dict[str, Any]:
    return {
        'size': stats.size,
        'k': stats.k,
        'l': stats.l,
        'tables': [
            {'table': t.table, 'buckets': t.buckets, 'max_occupancy': t.max_occupancy,
             'mean_occupancy': t.mean_occupancy}
            for t in stats.tables
        ],
        'histogram': {str(size): count for size, count in stats.histogram.items()},
    }


def prediction_record(inst: InstanceMask, mask_path: str) -> PredictionRecord:
    return PredictionRecord(
        image_id=inst.image_id,
        class_label=inst.class_label,
        score=inst.score,
        node_id=inst.node_id,
        bbox=inst.bbox.to_list(),
        mask=mask_path,
    )
