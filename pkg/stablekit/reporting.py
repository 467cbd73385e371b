"""JSON reports and terminal summaries."""

import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from .config import FLOAT_DIGITS, TOOL_NAME, TOOL_VERSION
from .utils import Colors, log_success


def round_floats(value: Any, digits: int = FLOAT_DIGITS) -> Any:
    """Round every float to ``digits`` significant digits; infinities become strings."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        rounded = float(f"{value:.{digits}g}")
        # no negative zero
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, dict):
        return {str(k): round_floats(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, digits) for v in value]
    return value


def build_report(operation: str, inputs: Dict[str, Any], result: Any,
                 scale: Optional[int] = None, witnesses: Any = None,
                 reason: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Assemble a report with the input echo and tool version."""
    report = {
        "operation": operation,
        "inputs": inputs,
        "result": result,
        "scaleL": scale,
        "witnesses": witnesses if witnesses is not None else [],
        "tool": {"name": TOOL_NAME, "version": TOOL_VERSION},
    }
    if reason is not None:
        report["reason"] = reason
    return round_floats(report)


def render_report(report: Dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: Dict[str, Any], path: Optional[str] = None) -> None:
    """Write the report to ``path`` or to stdout."""
    text = render_report(report)
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text)
    log_success(f"Report written to {path}")


def _out(line: str = "") -> None:
    print(line, file=sys.stderr)


def print_status(label: str, status: bool, ok_msg: str = "", err_msg: str = "") -> None:
    if status:
        _out(f"  {Colors.GREEN}✓{Colors.ENDC} {label}: {ok_msg}")
    else:
        _out(f"  {Colors.RED}✗{Colors.ENDC} {label}: {err_msg}")


def display_banner(title: str) -> None:
    _out(f"\n{Colors.BOLD}{'=' * 80}{Colors.ENDC}")
    _out(f"{Colors.BOLD}{title:^80}{Colors.ENDC}")
    _out(f"{Colors.BOLD}{'=' * 80}{Colors.ENDC}")


def display_verify_summary(level: str, results: Sequence[Dict[str, Any]],
                           diffs: Sequence[Dict[str, Any]]) -> None:
    """Status table of a verification run followed by regression differences."""
    display_banner(f"stablekit verification ({level})")
    _out(f"{Colors.BOLD}Checks:{Colors.ENDC}")
    for result in results:
        print_status(result["name"], result["passed"], ok_msg=result["message"],
                     err_msg=result["message"])
    _out(f"\n{Colors.BOLD}Regression values:{Colors.ENDC}")
    if not diffs:
        print_status("Pinned constants", True, ok_msg="no differences")
    for diff in diffs:
        print_status(diff["name"], False,
                     err_msg=f"expected {diff['expected']!r}, measured {diff['measured']!r}")


def display_constant_table(constants: Dict[str, Any]) -> None:
    """Measured constants, one per line."""
    if not constants:
        return
    _out(f"\n{Colors.BOLD}Measured constants:{Colors.ENDC}")
    width = max(len(name) for name in constants)
    for name in sorted(constants):
        _out(f"  {name:<{width}}  {round_floats(constants[name])}")

