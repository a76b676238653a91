import json

import pytest

from ..PetriNet import enumerate_variants
from ..errors import NetParseError
from ..utils.net_loader import detect_format, load_net, parse_net, resolve_net
from .conftest import PARALLEL_NET, SEQUENCE_NET, V

PNML_PARALLEL = """<?xml version="1.0" encoding="UTF-8"?>
<pnml xmlns="http://www.pnml.org/version-2009/grammar/pnml">
  <net id="parallel_pnml" type="http://www.pnml.org/version-2009/grammar/ptnet">
    <page id="page1">
      <place id="i"><initialMarking><text>1</text></initialMarking></place>
      <place id="p1"/><place id="p2"/><place id="q1"/><place id="q2"/><place id="o"/>
      <transition id="split"><name><text>tau split</text></name>
        <toolspecific tool="ProM" version="6.4" activity="$invisible$"/></transition>
      <transition id="t_a"><name><text>register request</text></name></transition>
      <transition id="t_b"><name><text>check</text></name></transition>
      <transition id="join"><name><text></text></name></transition>
      <arc id="a1" source="i" target="split"/>
      <arc id="a2" source="split" target="p1"/>
      <arc id="a3" source="split" target="p2"/>
      <arc id="a4" source="p1" target="t_a"/>
      <arc id="a5" source="t_a" target="q1"/>
      <arc id="a6" source="p2" target="t_b"/>
      <arc id="a7" source="t_b" target="q2"/>
      <arc id="a8" source="q1" target="join"/>
      <arc id="a9" source="q2" target="join"/>
      <arc id="a10" source="join" target="o"><inscription><text>1</text></inscription></arc>
    </page>
    <finalmarkings>
      <marking><place idref="o"><text>1</text></place></marking>
    </finalmarkings>
  </net>
</pnml>
"""


class TestJsonNets:
    def test_sequence_net(self):
        net = parse_net(json.dumps(SEQUENCE_NET), "json")
        assert net.name == "sequence"
        assert len(net.places) == 2
        assert [t.label for t in net.transitions] == ["a"]

    def test_arc_multiplicity(self):
        doc = dict(SEQUENCE_NET, arcs=[["p1", "t_a", 2], ["t_a", "p2"]])
        net = parse_net(json.dumps(doc), "json")
        assert net.pre["t_a"] == {"p1": 2}

    def test_malformed_json_has_location(self):
        with pytest.raises(NetParseError) as info:
            parse_net('{"places": [', "json")
        assert info.value.location.startswith("line 1")

    def test_missing_key(self):
        doc = {k: v for k, v in SEQUENCE_NET.items() if k != "arcs"}
        with pytest.raises(NetParseError, match="arcs"):
            parse_net(json.dumps(doc), "json")

    def test_bad_arc_shape(self):
        doc = dict(SEQUENCE_NET, arcs=[["p1"]])
        with pytest.raises(NetParseError) as info:
            parse_net(json.dumps(doc), "json")
        assert info.value.location == "$.arcs[0]"

    def test_negative_final_tokens(self):
        doc = dict(SEQUENCE_NET, final=[{"p2": -1}])
        with pytest.raises(NetParseError) as info:
            parse_net(json.dumps(doc), "json")
        assert info.value.location == "$.final[0]"

    def test_dangling_arc(self):
        doc = dict(SEQUENCE_NET, arcs=[["p1", "t_a"], ["t_a", "p9"]])
        with pytest.raises(NetParseError, match="dangling arc"):
            parse_net(json.dumps(doc), "json")

    def test_unknown_format(self):
        with pytest.raises(NetParseError):
            parse_net("{}", "bpmn")


class TestPnml:
    def test_parallel_net(self):
        net = parse_net(PNML_PARALLEL, "pnml")
        assert net.name == "parallel_pnml"
        assert net.visible_labels == {"register_request", "check"}
        assert sorted(net.places) == ["i", "o", "p1", "p2", "q1", "q2"]
        assert not net.dead_markings_final

    def test_language(self):
        vs = enumerate_variants(parse_net(PNML_PARALLEL.encode("utf-8"), "pnml"))
        assert vs.variants == {V(["register_request", "check"]), V(["check", "register_request"])}

    def test_malformed_xml(self):
        with pytest.raises(NetParseError, match="malformed PNML") as info:
            parse_net("<pnml><net id='x'>", "pnml")
        assert "line" in info.value.location

    def test_no_net(self):
        with pytest.raises(NetParseError, match="no <net>"):
            parse_net("<pnml/>", "pnml")

    def test_missing_initial_marking(self):
        text = PNML_PARALLEL.replace("<initialMarking><text>1</text></initialMarking>", "")
        with pytest.raises(NetParseError, match="initial marking"):
            parse_net(text, "pnml")


class TestResolution:
    def test_detect_format(self):
        assert detect_format("net.pnml") == "pnml"
        assert detect_format("net.json") == "json"
        with pytest.raises(NetParseError):
            detect_format("net.txt")

    def test_explicit_path(self, tmp_path):
        path = tmp_path / "parallel.json"
        path.write_text(json.dumps(PARALLEL_NET), encoding="utf-8")
        net = load_net(str(path))
        assert enumerate_variants(net).variants == {V("ab"), V("ba")}

    def test_named_system_in_data_dir(self, tmp_path, monkeypatch):
        (tmp_path / "sys_a.pnml").write_text(PNML_PARALLEL, encoding="utf-8")
        monkeypatch.setenv("VF_DATA_DIR", str(tmp_path))
        assert resolve_net("sys_a") == tmp_path / "sys_a.pnml"
        assert load_net("sys_a").name == "parallel_pnml"

    def test_name_from_file_stem(self, tmp_path):
        doc = {k: v for k, v in SEQUENCE_NET.items() if k != "name"}
        (tmp_path / "seq.json").write_text(json.dumps(doc), encoding="utf-8")
        assert load_net("seq", data_dir=tmp_path).name == "seq"

    def test_unresolvable(self, tmp_path, monkeypatch):
        monkeypatch.delenv("VF_DATA_DIR", raising=False)
        with pytest.raises(NetParseError, match="cannot resolve"):
            resolve_net("pb_system_9_9")
