"""Paragraph-graph credibility assessment for threat reports."""

import json as _json

try:
    from ._kgv import *  # noqa: F401,F403  (installed wheel layout)
    from . import _kgv as _ext
except ImportError:  # in-tree build: _kgv sits next to the package on sys.path
    from _kgv import *  # noqa: F401,F403
    import _kgv as _ext

__version__ = _ext.__version__


def assess(pending, kg, reports, scripted_transcript="", **kwargs):
    """Run the full pipeline and return the assessment as a dict."""
    if not isinstance(scripted_transcript, str):
        scripted_transcript = _json.dumps(scripted_transcript)
    return _json.loads(
        _ext.assess_json(pending, kg, reports, scripted_transcript, **kwargs)
    )


def match_triples(claim_triple, facts, k=5):
    """Rank fact triples against one claim triple; returns a list of dicts."""
    return _json.loads(_ext.match_triples_json(list(claim_triple), _json.dumps(facts), k))
