from __future__ import annotations

import functools
import json
from pathlib import Path

import pytest

from actdiag.diagram import load_diagram, parse_diagram
from actdiag.translate import TranslationConfig, translate

CORPUS = Path(__file__).resolve().parents[1] / "src" / "actdiag" / "corpus"


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.json"


@functools.lru_cache(maxsize=None)
def corpus_model(name: str):
    return translate(load_diagram(corpus_path(name)))


@functools.lru_cache(maxsize=None)
def corpus_verdicts(name: str):
    """(deadlock, determinism) verdicts of a corpus model, explored once."""
    from actdiag.checker import check_all

    return check_all(corpus_model(name))


def activity(aid, nodes, edges):
    """Activity JSON from ``(id, kind, extra)`` nodes and ``(src, tgt, extra)`` edges."""
    nj = []
    for n in nodes:
        nid, kind, *rest = n
        obj = {"id": nid, "kind": kind}
        if rest:
            obj.update(rest[0])
        nj.append(obj)
    ej = []
    for i, e in enumerate(edges, 1):
        src, tgt, *rest = e
        obj = {"id": f"e{i}", "index": i, "source": src, "target": tgt}
        if rest:
            obj.update(rest[0])
        ej.append(obj)
    return {"id": aid, "nodes": nj, "edges": ej}


def diagram(*activities, top=None):
    top = top or activities[0]["id"]
    return parse_diagram(json.dumps({"topLevel": top, "activities": list(activities)}))


def simple(nodes, edges, aid="ad"):
    return diagram(activity(aid, nodes, edges))


def model_of(d, **cfg):
    return translate(d, TranslationConfig(**cfg))


@pytest.fixture
def tmp_out(tmp_path):
    return tmp_path
