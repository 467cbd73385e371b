"""Stable subgroups of free groups: Stallings graphs, coset geometry, height and width,
and extension of quasimorphisms from subgroups."""

from .config import TOOL_VERSION as __version__
