"""Compressed-layer Helmholtz scattering solvers."""

import json

from ._core import (
    CircularProblem,
    CircularSolution,
    RectProblem,
    __version__,
    exact_scattering_series,
    hankel1,
    hankel1_scaled,
    hankel1_sequence,
    rect_errors,
    rect_study,
    run_text,
    solve_circular,
)
from ._core import lshape_json as _lshape_json


def lshape(**kwargs):
    """Field export of the L-shaped scatterer run, parsed into a dict."""
    return json.loads(_lshape_json(**kwargs))


def run(experiment, **options):
    """Runs a CLI experiment and returns its CSV or JSON text.

    Option values are converted with str(); lists become comma-separated.
    """
    kv = {}
    for key, value in options.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        kv[key] = str(value)
    return run_text(experiment, kv)


__all__ = [
    "CircularProblem",
    "CircularSolution",
    "RectProblem",
    "__version__",
    "exact_scattering_series",
    "hankel1",
    "hankel1_scaled",
    "hankel1_sequence",
    "lshape",
    "rect_errors",
    "rect_study",
    "run",
    "solve_circular",
]
