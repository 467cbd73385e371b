"""Default parameters shared by the library and the command line."""

import os
from pathlib import Path

TOOL_NAME = "stablekit"
TOOL_VERSION = "0.1.0"

DEFAULT_DEPTH = 3
DEFAULT_POWER_DEPTH = 16
DEFAULT_TOLERANCE = 1e-9
DEFAULT_SAMPLER_RETRIES = 200
DEFAULT_DEFECT_SAMPLE = 2000
# ball-pair grids larger than this are sampled instead of enumerated
EXHAUSTIVE_GRID_LIMIT = 250_000
# trace threshold default is this multiple of the longest generator
TRACE_THRESHOLD_FACTOR = 4
FLOAT_DIGITS = 12


def default_trace_threshold(max_generator_length: int) -> int:
    """Default trace threshold D for a subgroup with the given longest generator."""
    return TRACE_THRESHOLD_FACTOR * max(1, max_generator_length)


def regression_path() -> Path:
    """Location of the regression-constant store."""
    override = os.environ.get("STABLEKIT_REGRESSION")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "data" / "regression.json"


# ball radius for compatibility scans and restriction checks
DEFAULT_SCALE = 4
# radius of the ball on which the projection-comparison constant is measured
PROJECTION_SAMPLE_RADIUS = 6
# trace threshold used by the kernel-class construction
DEMO_TRACE_THRESHOLD = 2
DEMO_WORD_LENGTH = 8
DEMO_TOLERANCE = 1e-6
RESTRICTION_CHECK_RADIUS = 6
# subgroups given to qm commands live in at least F_2
EXTENSION_RANK = 2
# entries kept by the process-wide result cache and by each evaluation memo
RESULT_CACHE_LIMIT = 2048
MEMO_LIMIT = 4096
