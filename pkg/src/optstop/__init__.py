"""Optimal stopping with observation costs for one-dimensional Markov processes.

Analytic layers: ``model`` (problem specs), ``sturm`` (fundamental solutions),
``potential`` (cost potentials), ``solver`` (ratio optimisation), ``levy`` and
``ssmp`` (spectrally negative and self-similar families), ``specfun``.
``mc`` (Monte Carlo oracle) and ``cli`` load on first use since they pull in
numba and jsonschema.
"""

import importlib

from . import catalog, levy, model, potential, rules, solver, specfun, ssmp, sturm
from .errors import OptStopError

__version__ = "0.1.0"

__all__ = ["catalog", "cli", "levy", "mc", "model", "potential", "rules", "solver", "specfun", "ssmp", "sturm",
           "OptStopError", "__version__"]


def __getattr__(name):
    if name in ("mc", "cli"):
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
