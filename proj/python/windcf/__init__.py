"""Counterfactual control for a wind-turbine transformer.

Thin wrapper over the compiled `_windcf` module: rows and options go in as
dicts, structured results come back as dicts.
"""

import json as _json

try:
    from windcf._windcf import (  # type: ignore
        DataError,
        Engine as _CEngine,
        SolverFailure,
        __version__,
        generate as _generate,
        p_max,
        train as _train,
    )
except ImportError:  # the module built by CMake sits at the top level
    from _windcf import (  # type: ignore
        DataError,
        Engine as _CEngine,
        SolverFailure,
        __version__,
        generate as _generate,
        p_max,
        train as _train,
    )

__all__ = [
    "DataError",
    "Engine",
    "SolverFailure",
    "__version__",
    "generate",
    "p_max",
    "train",
]


def _dumps(obj) -> str:
    if obj is None:
        return ""
    if isinstance(obj, str):
        return obj
    return _json.dumps(obj)


def generate(out_csv, spec=None, truth_out=""):
    """Generate a synthetic SCADA series; returns a summary dict."""
    return _json.loads(_generate(_dumps(spec), out_csv, truth_out))


def train(data_csv, out_dir, **options):
    """Train the classifier and surrogates; returns the report dict."""
    return _json.loads(_train(data_csv, out_dir, _dumps(options or None)))


class Engine:
    """Loaded models + assets with the main operations."""

    def __init__(self, assets, model, n, t):
        self._c = _CEngine(assets, model, n, t)

    def p_max(self, ws):
        return self._c.p_max(ws)

    def score(self, row):
        return self._c.score(_dumps(row))

    def classify(self, row):
        return self._c.classify(_dumps(row))

    def predict_n(self, row):
        return self._c.predict_n(_dumps(row))

    def predict_t(self, row):
        return self._c.predict_t(_dumps(row))

    def explain(self, row, mode="operator", **options):
        return _json.loads(self._c.explain(_dumps(row), mode, _dumps(options or None)))

    def simulate(self, data_csv, from_ts, to_ts, mode="operator", out_dir="", **options):
        return _json.loads(
            self._c.simulate(data_csv, from_ts, to_ts, mode, _dumps(options or None), out_dir)
        )
