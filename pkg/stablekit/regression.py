"""Regression store for measured constants (defects, Hausdorff gaps, barycenter radii)."""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import TOOL_VERSION, regression_path
from .utils import log_debug, log_info, log_warning


class RegressionStore:
    """Named measured values pinned on a first run and compared afterwards."""

    def __init__(self, path: Optional[Path] = None, debug: bool = False):
        """Initialize the store.

        Args:
            path: JSON file backing the store, ``config.regression_path()`` by default
            debug: Whether debug mode is enabled
        """
        self.path = Path(path) if path is not None else regression_path()
        self.debug = debug
        self.values: Dict[str, Any] = {}
        self.dirty = False

    def load(self) -> bool:
        """Load pinned values from disk.

        Returns:
            bool: Whether a store file was found and parsed
        """
        if not self.path.exists():
            log_debug(f"No regression store at {self.path}", self.debug)
            return False
        try:
            with open(self.path, 'r') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            log_warning(f"Failed to load regression store {self.path}: {e}")
            return False
        self.values = dict(data.get("values", {}))
        log_debug(f"Loaded {len(self.values)} regression value(s) from {self.path}", self.debug)
        return True

    def record(self, name: str, value: Any, overwrite: bool = False) -> bool:
        """Pin a value unless one is already stored.

        Returns:
            bool: Whether the value was written
        """
        if name in self.values and not overwrite:
            return False
        self.values[name] = value
        self.dirty = True
        log_debug(f"Recorded {name} = {value!r}", self.debug)
        return True

    def compare(self, measured: Dict[str, Any], tolerance: float = 0.0) -> List[Dict[str, Any]]:
        """Differences between measured values and pinned ones.

        Values without a pinned counterpart are not reported.

        Returns:
            Sorted list of {"name", "expected", "measured"} entries
        """
        diffs = []
        for name in sorted(measured):
            if name not in self.values:
                continue
            expected, actual = self.values[name], measured[name]
            if not _same(expected, actual, tolerance):
                diffs.append({"name": name, "expected": expected, "measured": actual})
        return diffs

    def missing(self, measured: Dict[str, Any]) -> List[str]:
        return sorted(name for name in measured if name not in self.values)

    def save(self) -> bool:
        """Write the store if it changed.

        Returns:
            bool: Whether the save was successful
        """
        if not self.dirty:
            return True
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, 'w') as f:
                json.dump({"tool_version": TOOL_VERSION, "values": self.values}, f,
                          indent=2, sort_keys=True)
                f.write("\n")
        except OSError as e:
            log_warning(f"Failed to save regression store {self.path}: {e}")
            return False
        self.dirty = False
        log_info(f"Saved {len(self.values)} regression value(s) to {self.path}")
        return True


def _same(expected: Any, actual: Any, tolerance: float) -> bool:
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        return math.isclose(expected, actual, rel_tol=0.0, abs_tol=tolerance) or expected == actual
    return expected == actual


def load(path: Optional[Path] = None, debug: bool = False) -> RegressionStore:
    store = RegressionStore(path, debug)
    store.load()
    return store


def record(store: RegressionStore, measured: Dict[str, Any]) -> List[str]:
    """Pin every measured value the store lacks and save.

    Returns:
        Names that were newly recorded
    """
    written = [name for name in sorted(measured) if store.record(name, measured[name])]
    store.save()
    return written


def compare(store: RegressionStore, measured: Dict[str, Any], tolerance: float = 0.0) -> List[Dict[str, Any]]:
    return store.compare(measured, tolerance)
