from .bench import (
    BenchConfiguration,
    BenchError,
    BenchReport,
    BenchRow,
    BenchSuite,
    load_suite,
    measure_run,
    passages_considered,
    report_to_json_dict,
    report_to_markdown,
    run_benchmark,
)
from .checklist import (
    Checklist,
    ChecklistScore,
    Fact,
    FactMatch,
    bundled_checklist,
    bundled_graded_responses,
    checklist_from_dict,
    load_checklist,
    score_checklist,
)

__all__ = [
    "BenchConfiguration",
    "BenchError",
    "BenchReport",
    "BenchRow",
    "BenchSuite",
    "Checklist",
    "ChecklistScore",
    "Fact",
    "FactMatch",
    "bundled_checklist",
    "bundled_graded_responses",
    "checklist_from_dict",
    "load_checklist",
    "load_suite",
    "measure_run",
    "passages_considered",
    "report_to_json_dict",
    "report_to_markdown",
    "run_benchmark",
    "score_checklist",
]
