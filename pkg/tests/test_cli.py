import json

import pytest

from stylener.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_MISSING,
    EXIT_OK,
    main,
)


@pytest.fixture
def tiny_config_file(tmp_path):
    cfg = {
        "out_dir": str(tmp_path / "run"),
        "n_target_test": 4,
        "generate_k": 2,
        "dev_fraction": 0.0,
        "model": {"dim": 4},
        "train": {"epochs": 1, "batch_size": 8, "learning_rate": 0.1},
        "tagger": {"dim": 8, "epochs": 2, "learning_rate": 0.5},
        "style": {"epochs": 2},
        "synth": {"n_pairs": 12, "n_source": 10, "n_target": 10},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path, tmp_path / "run"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsage:
    def test_help_exits_zero(self, capsys):
        code, out, _ = run(capsys, "--help")
        assert code == 0
        assert "stylener" in out

    def test_missing_command_is_usage_error(self, capsys):
        code, _, _ = run(capsys)
        assert code == 2

    def test_unknown_command_is_usage_error(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == 2


class TestExitCodes:
    def test_bad_config_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"no_such_key": 1}), encoding="utf-8")
        code, _, err = run(capsys, "synth", "--config", str(bad))
        assert code == EXIT_CONFIG
        assert "error:" in err

    def test_missing_prerequisite(self, capsys, tmp_path):
        code, _, err = run(capsys, "prepare", "--out", str(tmp_path / "empty"))
        assert code == EXIT_MISSING
        assert "error:" in err

    def test_unparseable_data(self, capsys, tmp_path, tiny_config_file):
        config, out_dir = tiny_config_file
        assert run(capsys, "synth", "--config", str(config))[0] == EXIT_OK
        (out_dir / "synth" / "source.conll").write_text(
            "word B-PER extra-column nonsense\n\n", encoding="utf-8"
        )
        code, _, err = run(capsys, "prepare", "--config", str(config))
        assert code == EXIT_DATA
        assert "error:" in err

    def test_evaluate_without_taggers(self, capsys, tiny_config_file):
        config, _ = tiny_config_file
        assert run(capsys, "synth", "--config", str(config))[0] == EXIT_OK
        code, _, err = run(capsys, "evaluate", "--config", str(config))
        assert code == EXIT_MISSING
        assert "no tagger checkpoints" in err


class TestHappyPath:
    def test_stage_chain_emits_json_summaries(self, capsys, tiny_config_file):
        config, out_dir = tiny_config_file
        c = str(config)

        code, out, _ = run(capsys, "synth", "--config", c)
        assert code == EXIT_OK
        assert json.loads(out)["pairs"] == 12

        code, out, _ = run(capsys, "prepare", "--config", c)
        assert code == EXIT_OK
        assert json.loads(out)["pairs"]["kept"] <= 12

        code, out, _ = run(capsys, "train-ner", "--config", c, "--selector", "source_only")
        assert code == EXIT_OK
        assert json.loads(out)["selector"] == "source_only"

        code, out, _ = run(capsys, "pseudo-label", "--config", c, "--threshold", "0.5")
        assert code == EXIT_OK
        assert json.loads(out)["threshold"] == 0.5

        code, out, _ = run(capsys, "train-transfer", "--config", c)
        assert code == EXIT_OK
        assert (out_dir / "transfer" / "transfer.ckpt").exists()

        code, out, _ = run(capsys, "generate", "--config", c, "--k", "2")
        assert code == EXIT_OK
        assert (out_dir / "generated" / "pseudo.conll").exists()

        code, out, _ = run(capsys, "train-ner", "--config", c, "--selector", "p_plus_t")
        assert code == EXIT_OK

        code, out, _ = run(capsys, "evaluate", "--config", c)
        assert code == EXIT_OK
        rows = json.loads(out)
        assert set(rows) == {"ner_source_only", "ner_p_plus_t"}

        code, out, _ = run(capsys, "baseline-ada", "--config", c)
        assert code == EXIT_OK
        assert json.loads(out)["sentences"] == json.loads(
            (out_dir / "prepared" / "counts.json").read_text()
        )["source"]["kept"]

    def test_seed_flag_overrides_config(self, capsys, tiny_config_file):
        config, out_dir = tiny_config_file
        code, _, _ = run(capsys, "synth", "--config", str(config), "--seed", "77")
        assert code == EXIT_OK
        manifest = json.loads((out_dir / "synth" / "manifest.json").read_text())
        assert manifest["seed"] == 77

    def test_out_flag_redirects(self, capsys, tmp_path):
        alt = tmp_path / "elsewhere"
        code, _, _ = run(capsys, "synth", "--out", str(alt))
        assert code == EXIT_OK
        assert (alt / "synth" / "pairs.jsonl").exists()

    def test_bad_selector_is_usage_error(self, capsys, tiny_config_file):
        config, _ = tiny_config_file
        code, _, _ = run(capsys, "train-ner", "--config", str(config), "--selector", "bogus")
        assert code == 2
