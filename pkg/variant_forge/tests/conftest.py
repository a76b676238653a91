import json
import os

import pytest

from ..Variants import Variant
from ..utils.net_loader import parse_net


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: adversarial training runs (deselect with -m 'not slow')")


def V(text):
    """Variant from a compact string: V("abc") == <a,b,c>"""
    return Variant(list(text))


# Toy nets in the JSON net format
SEQUENCE_NET = {
    "name": "sequence",
    "places": ["p1", "p2"],
    "transitions": [{"id": "t_a", "label": "a"}],
    "arcs": [["p1", "t_a"], ["t_a", "p2"]],
    "initial": {"p1": 1},
    "final": [{"p2": 1}],
}

PARALLEL_NET = {
    "name": "parallel",
    "places": ["i", "p1", "p2", "q1", "q2", "o"],
    "transitions": [
        {"id": "split", "label": None},
        {"id": "t_a", "label": "a"},
        {"id": "t_b", "label": "b"},
        {"id": "join", "label": None},
    ],
    "arcs": [
        ["i", "split"], ["split", "p1"], ["split", "p2"],
        ["p1", "t_a"], ["t_a", "q1"], ["p2", "t_b"], ["t_b", "q2"],
        ["q1", "join"], ["q2", "join"], ["join", "o"],
    ],
    "initial": {"i": 1},
    "final": [{"o": 1}],
}

CHOICE_NET = {
    "name": "choice",
    "places": ["i", "p", "o"],
    "transitions": [
        {"id": "t_a", "label": "a"},
        {"id": "t_b", "label": "b"},
        {"id": "t_c", "label": "c"},
    ],
    "arcs": [["i", "t_a"], ["t_a", "p"], ["p", "t_b"], ["t_b", "o"], ["p", "t_c"], ["t_c", "o"]],
    "initial": {"i": 1},
    "final": [{"o": 1}],
}

# a silent cycle between p and r must not livelock the playout
SILENT_LOOP_NET = {
    "name": "silent_loop",
    "places": ["i", "p", "r", "o"],
    "transitions": [
        {"id": "t_a", "label": "a"},
        {"id": "tau1", "label": None},
        {"id": "tau2", "label": None},
        {"id": "t_b", "label": "b"},
    ],
    "arcs": [["i", "t_a"], ["t_a", "p"], ["p", "tau1"], ["tau1", "r"], ["r", "tau2"], ["tau2", "p"],
             ["p", "t_b"], ["t_b", "o"]],
    "initial": {"i": 1},
    "final": [{"o": 1}],
}

# no final marking: dead markings are final
DEADLOCK_NET = {
    "name": "deadlock",
    "places": ["i", "p", "q"],
    "transitions": [
        {"id": "t_a", "label": "a"},
        {"id": "t_b", "label": "b"},
        {"id": "t_c", "label": "c"},
    ],
    "arcs": [["i", "t_a"], ["t_a", "p"], ["p", "t_b"], ["t_b", "q"], ["i", "t_c"], ["t_c", "q"]],
    "initial": {"i": 1},
}

# first event a|b|c, then nothing, x, or x y: 9 variants of length 1..3
GRAMMAR_NET = {
    "name": "grammar",
    "places": ["i", "p", "q", "o"],
    "transitions": [
        {"id": "t_a", "label": "a"},
        {"id": "t_b", "label": "b"},
        {"id": "t_c", "label": "c"},
        {"id": "t_x", "label": "x"},
        {"id": "t_y", "label": "y"},
        {"id": "skip1", "label": None},
        {"id": "skip2", "label": None},
    ],
    "arcs": [
        ["i", "t_a"], ["t_a", "p"], ["i", "t_b"], ["t_b", "p"], ["i", "t_c"], ["t_c", "p"],
        ["p", "t_x"], ["t_x", "q"], ["p", "skip1"], ["skip1", "o"],
        ["q", "t_y"], ["t_y", "o"], ["q", "skip2"], ["skip2", "o"],
    ],
    "initial": {"i": 1},
    "final": [{"o": 1}],
}

GRAMMAR_VARIANTS = {V(first + rest) for first in "abc" for rest in ("", "x", "xy")}

TOY_NETS = {
    "sequence": SEQUENCE_NET,
    "parallel": PARALLEL_NET,
    "choice": CHOICE_NET,
    "silent_loop": SILENT_LOOP_NET,
    "deadlock": DEADLOCK_NET,
    "grammar": GRAMMAR_NET,
}


def load_toy(name):
    return parse_net(json.dumps(TOY_NETS[name]), "json")


def grammar_variant(name, first_events):
    """A grammar net under another name with its own first-event choice"""
    doc = json.loads(json.dumps(GRAMMAR_NET))
    doc["name"] = name
    doc["transitions"] = [t for t in doc["transitions"]
                          if t["label"] not in set("abc") - set(first_events)]
    kept = {t["id"] for t in doc["transitions"]}
    doc["arcs"] = [arc for arc in doc["arcs"] if all(
        end in kept or end in doc["places"] for end in arc[:2])]
    return doc


@pytest.fixture
def net_dir(tmp_path):
    """A corpus directory with five grammar-like systems"""

    directory = tmp_path / "nets"
    directory.mkdir()
    for name, firsts in (("toy_1", "abc"), ("toy_2", "ab"), ("toy_3", "abc"), ("toy_4", "bc"), ("toy_5", "ac")):
        (directory / f"{name}.json").write_text(json.dumps(grammar_variant(name, firsts)), encoding="utf-8")
    return directory


@pytest.fixture
def corpus_dir():
    data_dir = os.environ.get("VF_DATA_DIR")
    if not data_dir:
        pytest.skip("VF_DATA_DIR is not set; the published nets are not available")
    return data_dir
