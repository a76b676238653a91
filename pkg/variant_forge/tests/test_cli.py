import json

import pytest

from ..cli import EXIT_DOMAIN_ERROR, EXIT_OK, EXIT_USAGE, PipelineConfig, main, pipeline
from ..errors import PlanError
from ..utils.json_save_load import load_object
from .conftest import GRAMMAR_NET, PARALLEL_NET


@pytest.fixture
def parallel_net(tmp_path):
    path = tmp_path / "parallel.json"
    path.write_text(json.dumps(PARALLEL_NET), encoding="utf-8")
    return path


def write_config(path, **entries):
    path.write_text(json.dumps(entries), encoding="utf-8")
    return path


class TestArguments:
    def test_unknown_flag(self):
        assert main(["playout", "--bogus"]) == EXIT_USAGE

    def test_missing_subcommand(self):
        assert main([]) == EXIT_USAGE

    def test_non_positive_k(self, tmp_path):
        assert main(["sample", "--checkpoint", "g.json", "--k", "0", "--out", str(tmp_path / "s.txt")]) == EXIT_USAGE

    def test_negative_burn_in(self, tmp_path):
        assert main(["sample", "--checkpoint", "g.json", "--k", "5", "--mode", "mh", "--burn-in", "-1",
                     "--out", str(tmp_path / "s.txt")]) == EXIT_USAGE

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert "0.1.0" in capsys.readouterr().out


class TestSubcommands:
    def test_playout(self, parallel_net, tmp_path):
        out = tmp_path / "variants.txt"
        assert main(["playout", "--net", str(parallel_net), "--out", str(out)]) == EXIT_OK
        assert out.read_text(encoding="utf-8") == "a b\nb a\n"
        manifest = load_object(f"{out}.manifest.json")
        assert manifest["status"] == "complete"
        assert str(parallel_net) in manifest["inputs"]
        assert manifest["base_seed"] == 0

    def test_stats(self, parallel_net, capsys):
        assert main(["stats", "--net", str(parallel_net)]) == EXIT_OK
        assert capsys.readouterr().out == "alphabet,variants,max_length,mean_length\n2,2,2,2.0\n"

    def test_split_ratio_one_is_a_domain_error(self, tmp_path, capsys):
        variants = tmp_path / "v.txt"
        variants.write_text("a b\nb a\n", encoding="utf-8")
        code = main(["split", "--variants", str(variants), "--ratio", "1.0", "--out", str(tmp_path / "split")])
        assert code == EXIT_DOMAIN_ERROR
        assert capsys.readouterr().err.startswith("error: [log-splitter]")

    def test_split_needs_ratio_or_bias(self, tmp_path):
        variants = tmp_path / "v.txt"
        variants.write_text("a b\nb a\n", encoding="utf-8")
        code = main(["split", "--variants", str(variants), "--out", str(tmp_path / "split")])
        assert code == EXIT_DOMAIN_ERROR

    def test_missing_net(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("VF_DATA_DIR", raising=False)
        code = main(["playout", "--net", str(tmp_path / "nowhere.json"), "--out", str(tmp_path / "v.txt")])
        assert code == EXIT_DOMAIN_ERROR
        assert "[petri-core] cannot resolve" in capsys.readouterr().err

    def test_eval_to_stdout(self, tmp_path, capsys):
        (tmp_path / "sampled.txt").write_text("# freq=3\na b\n# freq=1\nz\n", encoding="utf-8")
        (tmp_path / "system.txt").write_text("a b\nb a\n", encoding="utf-8")
        (tmp_path / "heldout.txt").write_text("b a\n", encoding="utf-8")
        code = main(["eval", "--sampled", str(tmp_path / "sampled.txt"), "--system", str(tmp_path / "system.txt"),
                     "--heldout", str(tmp_path / "heldout.txt")])
        assert code == EXIT_OK
        header, row = capsys.readouterr().out.splitlines()
        assert header.split(",")[:4] == ["unique", "tp", "tp_u", "score"]
        assert row == "2,0.500000,0.000000,0.353553,0,1,2,1,1,4"

    def test_eval_reads_rejected_draws(self, tmp_path, capsys):
        (tmp_path / "sampled.txt").write_text("# rejected=2\n# freq=3\na b\n", encoding="utf-8")
        (tmp_path / "system.txt").write_text("a b\nb a\n", encoding="utf-8")
        (tmp_path / "heldout.txt").write_text("b a\n", encoding="utf-8")
        code = main(["eval", "--sampled", str(tmp_path / "sampled.txt"), "--system", str(tmp_path / "system.txt"),
                     "--heldout", str(tmp_path / "heldout.txt")])
        assert code == EXIT_OK
        assert capsys.readouterr().out.splitlines()[1] == "1,0.500000,0.000000,0.353553,2,0,2,1,1,5"

    def test_sample_file_records_rejections(self, tmp_path):
        checkpoint = tmp_path / "gen.json"
        log = tmp_path / "log.txt"
        log.write_text("a b\n", encoding="utf-8")
        assert main(["train", "--log", str(log), "--generator", "markov", "--order", "1", "--smoothing", "1.0",
                     "--out", str(checkpoint)]) == EXIT_OK
        assert main(["sample", "--checkpoint", str(checkpoint), "--k", "300", "--out", str(tmp_path / "s.txt")]) == 0
        sidecar = load_object(tmp_path / "s.txt.json")
        assert (tmp_path / "s.txt").read_text(encoding="utf-8").startswith(f"# rejected={sidecar['rejected']}\n")

    def test_stages_compose_to_the_pipeline(self, parallel_net, tmp_path):
        seed = ["--seed", "3", "--jobs", "1"]
        staged = tmp_path / "staged"
        assert main(["playout", "--net", str(parallel_net), "--out", str(staged / "variants.txt")] + seed) == 0
        assert main(["split", "--variants", str(staged / "variants.txt"), "--ratio", "0.5",
                     "--out", str(staged)] + seed) == 0
        assert main(["train", "--log", str(staged / "observed.txt"), "--generator", "markov", "--order", "1",
                     "--smoothing", "1.0", "--out", str(staged / "generator.json")] + seed) == 0
        assert main(["sample", "--checkpoint", str(staged / "generator.json"), "--k", "500",
                     "--out", str(staged / "samples.txt")] + seed) == 0

        config = write_config(tmp_path / "pipeline.json", net=str(parallel_net), ratio=0.5, generator="markov",
                              generator_settings={"order": 1, "smoothing": 1.0}, k=500, seed=3)
        assert main(["pipeline", "--config", str(config), "--out", str(tmp_path / "whole")]) == 0
        for name in ("variants.txt", "observed.txt", "heldout.txt", "samples.txt"):
            assert (staged / name).read_bytes() == (tmp_path / "whole" / name).read_bytes(), name
        assert load_object(tmp_path / "whole" / "manifest.json")["status"] == "complete"

    def test_sweep_and_report(self, net_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("VF_DATA_DIR", str(net_dir))
        plan = write_config(tmp_path / "plan.json", rq="RQ3", systems=["toy_1", "toy_2"], generator="markov",
                            eval_k=200)
        out = tmp_path / "sweep"
        assert main(["sweep", "--plan", str(plan), "--out", str(out), "--jobs", "1", "--seed", "4"]) == EXIT_OK
        assert len((out / "runs.csv").read_text(encoding="utf-8").splitlines()) == 1 + 2 * 5 * 2
        assert load_object(out / "plan.json")["base_seed"] == 4
        manifest = load_object(out / "manifest.json")
        assert (manifest["status"], manifest["base_seed"]) == ("complete", 4)

        rebuilt = tmp_path / "rebuilt"
        assert main(["report", "--in", str(out), "--out", str(rebuilt), "--jobs", "1"]) == EXIT_OK
        for name in ("runs.csv", "ci.csv", "best_k.csv", "regression.json"):
            assert (rebuilt / name).read_bytes() == (out / name).read_bytes(), name


class TestPipeline:
    def test_smoothed_chain_recovers_the_parallel_net(self, parallel_net, tmp_path):
        config = PipelineConfig(net=str(parallel_net), ratio=0.5, generator="markov",
                                generator_settings={"order": 1, "smoothing": 1.0}, k=2000, seed=1)
        (record,) = pipeline(config, tmp_path)
        assert (record.result.tp, record.result.tp_u) == (1.0, 1.0)
        assert record.result.sizes == (2, 1, 1, 2000)
        assert "1.000000,1.000000,1.414214" in (tmp_path / "runs.csv").read_text(encoding="utf-8")

    def test_smoothed_chain_recovers_the_grammar_net(self, tmp_path):
        # b2 observes the six variants ending in x or x y; a, b and c are held out
        net = tmp_path / "grammar.json"
        net.write_text(json.dumps(GRAMMAR_NET), encoding="utf-8")
        config = PipelineConfig(net=str(net), bias="b2", generator="markov",
                                generator_settings={"order": 1, "smoothing": 1.0}, k=10_000, seed=2)
        (record,) = pipeline(config, tmp_path / "out")
        assert record.result.sizes == (9, 3, 6, 10_000)
        assert (record.result.tp, record.result.tp_u) == (1.0, 1.0)

    def test_failing_stage_is_named(self, parallel_net, tmp_path, capsys):
        config = write_config(tmp_path / "pipeline.json", net=str(parallel_net), bias="b1", generator="markov", k=10)
        assert main(["pipeline", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_DOMAIN_ERROR
        assert capsys.readouterr().err.startswith("error: split stage: [log-splitter]")

    def test_default_split(self):
        assert PipelineConfig(net="x").ratio == 0.7

    @pytest.mark.parametrize("entries", [{"net": "x", "colour": 1}, {"ratio": 0.5}, {"net": "x", "k": "10"},
                                         {"net": "x", "burn_in": -1}, {"net": "x", "enforce_mu": "yes"}])
    def test_bad_config(self, tmp_path, entries):
        with pytest.raises(PlanError):
            PipelineConfig.from_json(write_config(tmp_path / "c.json", **entries))
