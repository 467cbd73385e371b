"""Utility functions for stablekit: terminal logging, memoization and worker pools."""

import os
import sys
import functools
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Hashable, Iterable, List, Optional, TypeVar

from .config import MEMO_LIMIT, RESULT_CACHE_LIMIT

T = TypeVar("T")
R = TypeVar("R")

class BoundedMemo:
    """Thread-safe mapping that forgets its least recently used entries.

    Args:
        limit: Maximum number of entries kept
    """

    def __init__(self, limit: int = MEMO_LIMIT):
        if limit < 1:
            raise ValueError(f"memo limit must be positive, got {limit}")
        self.limit = limit
        self._entries: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> Optional[Any]:
        with self._lock:
            if key not in self._entries:
                return None
            self._entries.move_to_end(key)
            return self._entries[key]

    def setdefault(self, key: Hashable, value: Any) -> Any:
        """Store ``value`` unless ``key`` is present; return the stored value."""
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return self._entries[key]
            self._entries[key] = value
            while len(self._entries) > self.limit:
                self._entries.popitem(last=False)
            return value

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def __contains__(self, key: Hashable) -> bool:
        with self._lock:
            return key in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


# Cache for expensive pure computations (fiber products, intersection memo tables)
_RESULT_CACHE = BoundedMemo(RESULT_CACHE_LIMIT)


class Colors:
    """ANSI codes for log prefixes and status tables."""
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    BLUE = '\033[94m'
    BOLD = '\033[1m'
    ENDC = '\033[0m'


def _emit(line: str) -> None:
    # stdout is reserved for JSON reports
    print(line, file=sys.stderr)


def log_info(message: str) -> None:
    """Log progress to stderr."""
    _emit(f"{Colors.BLUE}{Colors.BOLD}[INFO]{Colors.ENDC} {message}")


def log_success(message: str) -> None:
    """Log a passed check or finished computation."""
    _emit(f"{Colors.GREEN}{Colors.BOLD}[SUCCESS]{Colors.ENDC} {message}")


def log_warning(message: str) -> None:
    """Log a recoverable problem, such as a non-malnormal input."""
    _emit(f"{Colors.YELLOW}{Colors.BOLD}[WARNING]{Colors.ENDC} {message}")


def log_error(message: str) -> None:
    """Log a failure before the process exits."""
    _emit(f"{Colors.RED}{Colors.BOLD}[ERROR]{Colors.ENDC} {message}")


def log_debug(message: str, debug: bool = False) -> None:
    """Print a debug message if debug mode is enabled."""
    if debug:
        _emit(f"{Colors.BLUE}[DEBUG]{Colors.ENDC} {message}")


def cached_result(key: str):
    """Memoize a pure computation in the process-wide LRU cache.

    The cache key combines ``key`` with the ``repr`` of every argument, so
    arguments must have a stable, value-based repr (words and graphs do).

    Args:
        key: Base key for the cache entry

    Returns:
        Decorated function that caches its result
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            cache_key = key
            if args or kwargs:
                arg_strs = [repr(a) for a in args]
                kwarg_strs = [f"{k}={v!r}" for k, v in sorted(kwargs.items())]
                cache_key += f"_{'_'.join(arg_strs)}_{'_'.join(kwarg_strs)}"

            cached = _RESULT_CACHE.get(cache_key)
            if cached is not None:
                return cached
            # first writer wins so concurrent callers observe one value
            return _RESULT_CACHE.setdefault(cache_key, func(*args, **kwargs))
        return wrapper
    return decorator


def clear_cache() -> None:
    """Drop every memoized result."""
    _RESULT_CACHE.clear()


def get_thread_count() -> int:
    """Read the worker count from STABLEKIT_THREADS.

    Returns:
        Positive worker count, 1 when unset or invalid
    """
    raw = os.environ.get('STABLEKIT_THREADS', '1')
    try:
        count = int(raw)
    except ValueError:
        log_warning(f"Ignoring non-integer STABLEKIT_THREADS={raw!r}")
        return 1
    return max(1, count)


def parallel_map(func: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map ``func`` over ``items`` with the configured worker count.

    Output order always matches input order.
    """
    work = list(items)
    threads = get_thread_count()
    if threads == 1 or len(work) < 2:
        return [func(item) for item in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, work))
