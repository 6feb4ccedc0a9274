import re
from pathlib import Path

import pytest

from actdiag.export import export_cspm
from actdiag.translate import TranslationError
from conftest import CORPUS, corpus_model, model_of, simple

GOLDEN = Path(__file__).parent / "golden"
_CHANNEL_USE = re.compile(r"\b((?:ce|oe|update|clear|endDiagram|startActivity|endActivity|behavior|signal|dc|get|set|tokenOverflow)_\w+|sysdone)\b")


def declared(text):
    return {m.group(1) for m in re.finditer(r"^channel (\w+)", text, re.M)}


def test_minimal_export_matches_the_golden_file():
    assert export_cspm(corpus_model("minimal")) == (GOLDEN / "minimal.csp").read_text()


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.json")), ids=lambda p: p.stem)
def test_every_used_channel_is_declared(path):
    text = export_cspm(corpus_model(path.stem))
    processes = set(re.findall(r"^(\w+)(?:\(.*\))? =$", text, re.M))
    used = set(_CHANNEL_USE.findall(text)) - processes
    assert used <= declared(text)
    assert "MAIN =" in text and text.endswith("assert MAIN :[deterministic [F]]\n")


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.json")), ids=lambda p: p.stem)
def test_export_is_byte_stable(path):
    from actdiag.diagram import load_diagram
    from actdiag.translate import translate

    again = translate(load_diagram(path))
    assert export_cspm(again) == export_cspm(corpus_model(path.stem))


def test_object_edges_get_one_channel_each():
    text = export_cspm(corpus_model("det_overlap"))
    assert "channel oe_det_2 : {0..3}" in text
    assert "oe_det." not in text


ENUM = {"type": "enum", "labels": ["gold", "silver-x"]}


def _enum_model():
    return model_of(
        simple(
            [
                ("init", "Initial"),
                ("p", "InputParameter", {"valueType": ENUM}),
                ("d", "Decision"),
                ("a", "BasicAction"),
                ("b", "BasicAction"),
                ("fin", "ActivityFinal"),
                ("f2", "ActivityFinal"),
            ],
            [
                ("init", "d"),
                ("p", "d", {"kind": "Object", "stereotype": "decisionInputFlow"}),
                ("d", "a", {"guard": "(= x gold)"}),
                ("d", "b", {"guard": "(!= x gold)"}),
                ("a", "fin"),
                ("b", "f2"),
            ],
        )
    )


def test_enum_values_become_label_constructors():
    text = export_cspm(_enum_model())
    assert "datatype Label = L_gold | L_silver_x\n" in text
    assert "channel oe_ad_2 : {L_gold, L_silver_x}" in text
    assert "(x == L_gold)" in text and "Mem_d_ad(L_gold)" in text
    # the locally hidden choice channel is still declared
    assert "channel dc_ad_d\n" in text
    assert used_labels(text) <= {"L_gold", "L_silver_x"}


def test_process_and_channel_names_must_not_clash():
    # node "update" in activity "ad" would be defined as update_ad
    m = model_of(simple([("init", "Initial"), ("update", "BasicAction"), ("fin", "ActivityFinal")], [("init", "update"), ("update", "fin")]))
    with pytest.raises(TranslationError, match="update_ad"):
        export_cspm(m)


def used_labels(text):
    return set(re.findall(r"\bL_\w+", text))


def test_ints_render_as_ranges_or_sets():
    text = export_cspm(corpus_model("det_overlap"))
    assert "channel update_det : {(-1), 1}" in text
    assert "get_x_det : {0..3}" in text
