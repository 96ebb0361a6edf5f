"""Python bindings for the Acurai faithfulness middleware.

Structured results come back as plain dicts and lists.
"""

import json as _json

from . import _acurai
from ._acurai import AcuraiError, format_interval, normalize, segment_response, wilson_interval

__all__ = [
    "AcuraiError",
    "check_response",
    "evaluate",
    "format_interval",
    "is_supported",
    "normalize",
    "protect",
    "remap",
    "run",
    "segment_response",
    "split_query",
    "wilson_interval",
]

__version__ = "0.1.0"


def is_supported(statement, sources):
    return _json.loads(_acurai.is_supported(statement, list(sources)))


def check_response(response, sources):
    return _json.loads(_acurai.check_response(response, list(sources)))


def split_query(query, threshold=0.75, cap=16):
    """Atomic queries, computed with the offline embedder."""
    return _json.loads(_acurai.split_query(query, threshold, cap))


def protect(text, prefix="QQ"):
    """Returns (masked_text, table)."""
    masked, table = _acurai.protect(text, prefix)
    return masked, _json.loads(table)


def remap(response, table):
    """Returns (text, report)."""
    out, report = _acurai.remap(response, _json.dumps(table))
    return out, _json.loads(report)


def run(query, passages, replay=None, script=None, config=None):
    """Full pipeline. Without `replay` or `script` the model is called over HTTP
    using $ACURAI_CONFIG and the ACURAI_LLM_* variables."""
    return _json.loads(
        _acurai.run(query, list(passages), replay or "", script or "", _json.dumps(config) if config else "")
    )


def evaluate(dataset, replay=None, script=None, workers=1, z=1.96):
    return _json.loads(_acurai.evaluate(str(dataset), replay or "", script or "", workers, z))
