"""
Loaders for Petri net documents: a PNML subset and a small JSON format.

Errors are reported with a location (XML position or element id, JSON path).
"""

import json
import logging
import os
import xml.etree.ElementTree as ET
from pathlib import Path

from ..PetriNet import Arc, PetriNet, Transition
from ..errors import NetParseError

logger = logging.getLogger(__name__)

FORMATS = ("pnml", "json")
DATA_DIR_ENV = "VF_DATA_DIR"


def _local(tag):
    """Tag name without its XML namespace"""
    return tag.rsplit("}", 1)[-1]


def _children(element, name):
    return [c for c in element if _local(c.tag) == name]


def _child(element, name):
    found = _children(element, name)
    return found[0] if found else None


def _text_of(element, name):
    """Text of <name><text>...</text></name> below element, or None"""
    holder = _child(element, name)
    if holder is None:
        return None
    text = _child(holder, "text")
    if text is None or text.text is None:
        return None
    return text.text.strip()


def _int_text(value, location):
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise NetParseError(f"expected an integer, got {value!r}", location=location) from None
    return number


def _is_invisible(transition):
    for tool in _children(transition, "toolspecific"):
        for key, value in tool.attrib.items():
            if "invisible" in key.lower() or "invisible" in str(value).lower():
                return True
        if any(_local(c.tag).lower() == "invisible" for c in tool):
            return True
    return False


def _parse_pnml(data):
    try:
        root = ET.fromstring(data)
    except ET.ParseError as ex:
        line, column = getattr(ex, "position", (None, None))
        raise NetParseError(f"malformed PNML: {ex}", location=f"line {line}, column {column}") from None

    nets = [e for e in root.iter() if _local(e.tag) == "net"]
    if not nets:
        raise NetParseError("no <net> element", location="document root")
    net = nets[0]

    places, initial, transitions, arcs = [], {}, [], []
    final_markings = []
    # <place idref=...> entries inside <finalmarkings> are not net places
    inside_finals = {
        id(e) for fm in net.iter() if _local(fm.tag) == "finalmarkings"
        for e in fm.iter() if e is not fm
    }
    for element in net.iter():
        if id(element) in inside_finals:
            continue
        tag = _local(element.tag)
        if tag == "place":
            place_id = element.get("id")
            if not place_id:
                raise NetParseError("place without id", location="<place>")
            places.append(place_id)
            tokens = _text_of(element, "initialMarking")
            if tokens is not None:
                count = _int_text(tokens, f"place {place_id}")
                if count:
                    initial[place_id] = count
        elif tag == "transition":
            t_id = element.get("id")
            if not t_id:
                raise NetParseError("transition without id", location="<transition>")
            name = _text_of(element, "name")
            label = None if (_is_invisible(element) or not name) else name.replace(" ", "_")
            transitions.append(Transition(t_id, label))
        elif tag == "arc":
            arc_id = element.get("id", "?")
            source, target = element.get("source"), element.get("target")
            if not source or not target:
                raise NetParseError("arc without source or target", location=f"arc {arc_id}")
            weight = _text_of(element, "inscription")
            weight = 1 if weight is None else _int_text(weight, f"arc {arc_id}")
            arcs.append(Arc(source, target, weight))
        elif tag == "finalmarkings":
            for marking in _children(element, "marking"):
                tokens = {}
                for place in _children(marking, "place"):
                    ref = place.get("idref")
                    text = _child(place, "text")
                    count = _int_text(text.text if text is not None else None, f"final marking place {ref}")
                    if count:
                        tokens[ref] = count
                final_markings.append(tokens)

    if not initial:
        raise NetParseError("missing initial marking", location=f"net {net.get('id', '?')}")
    return PetriNet(places, transitions, arcs, initial, final_markings, name=net.get("id"))


def _parse_json_net(data):
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as ex:
        location = f"line {ex.lineno}, column {ex.colno}" if hasattr(ex, "lineno") else None
        raise NetParseError(f"malformed JSON net: {ex}", location=location) from None
    if not isinstance(doc, dict):
        raise NetParseError("top level must be an object", location="$")

    for key in ("places", "transitions", "arcs"):
        if not isinstance(doc.get(key), list):
            raise NetParseError(f"missing list '{key}'", location=f"$.{key}")
    if not doc.get("initial"):
        raise NetParseError("missing initial marking", location="$.initial")

    transitions = []
    for i, entry in enumerate(doc["transitions"]):
        if not isinstance(entry, dict) or "id" not in entry:
            raise NetParseError("transition needs an 'id'", location=f"$.transitions[{i}]")
        label = entry.get("label")
        transitions.append(Transition(str(entry["id"]), label if label else None))

    arcs = []
    for i, entry in enumerate(doc["arcs"]):
        if not isinstance(entry, list) or len(entry) not in (2, 3):
            raise NetParseError("arc must be [source, target, multiplicity?]", location=f"$.arcs[{i}]")
        weight = entry[2] if len(entry) == 3 else 1
        if not isinstance(weight, int) or isinstance(weight, bool):
            raise NetParseError(f"arc multiplicity must be an integer, got {weight!r}",
                                location=f"$.arcs[{i}]")
        arcs.append(Arc(str(entry[0]), str(entry[1]), weight))

    finals = doc.get("final") or []
    if not isinstance(finals, list):
        raise NetParseError("'final' must be a list of markings", location="$.final")
    for location, marking in [("$.initial", doc["initial"])] + \
            [(f"$.final[{i}]", m) for i, m in enumerate(finals)]:
        if not isinstance(marking, dict):
            raise NetParseError("marking must be an object of place -> tokens", location=location)
        for place, tokens in marking.items():
            if not isinstance(tokens, int) or isinstance(tokens, bool) or tokens < 0:
                raise NetParseError(f"invalid token count {tokens!r} for {place}", location=location)

    return PetriNet([str(p) for p in doc["places"]], transitions, arcs,
                    doc["initial"], finals, name=doc.get("name"))


def parse_net(source, format):
    """
    Parses a net document given as bytes (or text) in the declared format.

    :param source:  document contents
    :param format:  'pnml' or 'json'
    """

    if format not in FORMATS:
        raise NetParseError(f"unknown net format {format!r}; expected one of {FORMATS}")
    if isinstance(source, str):
        source = source.encode("utf-8")
    if format == "pnml":
        return _parse_pnml(source)
    return _parse_json_net(source)


def detect_format(path):
    suffix = Path(path).suffix.lower()
    if suffix in (".pnml", ".xml"):
        return "pnml"
    if suffix == ".json":
        return "json"
    raise NetParseError(f"cannot tell the net format of {path}; pass it explicitly")


def resolve_net(ref, data_dir=None):
    """
    Resolves a net reference: an existing path, or a name looked up in the
    corpus directory ($VF_DATA_DIR) as <name>.pnml or <name>.json.
    """

    path = Path(ref)
    if path.is_file():
        return path
    data_dir = data_dir or os.environ.get(DATA_DIR_ENV)
    if data_dir:
        for suffix in (".pnml", ".json"):
            candidate = Path(data_dir) / f"{ref}{suffix}"
            if candidate.is_file():
                return candidate
    raise NetParseError(f"cannot resolve net {ref!r} (set {DATA_DIR_ENV} for named systems)")


def load_net(ref, format=None, data_dir=None):
    path = resolve_net(ref, data_dir)
    net = parse_net(path.read_bytes(), format or detect_format(path))
    if net.name is None:
        net.name = path.stem
    logger.info("loaded %r from %s", net, path)
    return net
