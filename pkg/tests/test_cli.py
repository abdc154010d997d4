"""Command line behaviour: exit codes, printed verdicts, artifacts."""

from __future__ import annotations

import json

import pytest

from semcom.cli import main
from semcom.corpus import load_corpus


class TestOracleCommand:
    def test_clean_run_exits_zero_with_pass_line(self, capsys):
        code = main(["oracle", "--systems", "24", "--seed", "1"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("PASS:")
        assert "24 randomized systems" in out

    def test_injected_error_exits_one_with_fail_line(self, tmp_path, capsys):
        code = main(
            [
                "oracle",
                "--systems",
                "9",
                "--inject-nats",
                "1e-6",
                "--output",
                str(tmp_path),
            ]
        )
        out = capsys.readouterr().out
        assert code == 1
        assert out.startswith("FAIL:")
        assert "first failure:" in out
        assert (tmp_path / "oracle_report.json").exists()


class TestMakeCorpusCommand:
    def test_written_file_loads_back(self, tmp_path, capsys):
        path = tmp_path / "tiny.tsv"
        code = main(
            ["make-corpus", "copy", "--output", str(path), "--pairs", "50", "--vocab", "25"]
        )
        assert code == 0
        assert "50 pairs" in capsys.readouterr().out
        corpus = load_corpus(path)
        assert len(corpus) == 50

    def test_bilingual_kind(self, tmp_path):
        path = tmp_path / "fr.tsv"
        assert main(["make-corpus", "fr_en", "--output", str(path), "--pairs", "40"]) == 0
        corpus = load_corpus(path)
        assert len(corpus) == 40
        assert any(src != tgt for src, tgt in corpus.pairs)


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_run")
    code = main(
        [
            "train",
            "--synthetic",
            "copy",
            "--pairs",
            "120",
            "--vocab",
            "25",
            "--output",
            str(out),
            "--epochs",
            "2",
            "--n-max",
            "4",
        ]
    )
    assert code == 0
    return out


class TestTrainEvalBaselineFlow:
    def test_train_writes_model_and_history(self, run_dir):
        assert (run_dir / "model.pt").exists()
        history = (run_dir / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,ce_nats,mi_nats,val_bleu,wall_seconds"
        assert len(history) == 3  # header plus two epochs

    def test_eval_prints_metric_json(self, run_dir, capsys):
        code = main(
            [
                "eval",
                "--model",
                str(run_dir / "model.pt"),
                "--synthetic",
                "copy",
                "--pairs",
                "40",
                "--vocab",
                "25",
                "--snr",
                "12",
            ]
        )
        assert code == 0
        blob = json.loads(capsys.readouterr().out)
        assert blob["snr_db"] == 12.0
        assert 0.0 <= blob["bleu"] <= 1.0
        assert blob["psi"] == pytest.approx(1.0 - blob["bleu"])

    def test_baseline_reports_score_and_codebook(self, tmp_path, capsys):
        book = tmp_path / "code.json"
        code = main(
            [
                "baseline",
                "--synthetic",
                "copy",
                "--pairs",
                "80",
                "--vocab",
                "25",
                "--snr",
                "40",
                "--eval-sentences",
                "20",
                "--codebook",
                str(book),
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "BLEU=1.0000" in out
        assert "bits/token" in out
        lines = book.read_text().strip().splitlines()
        assert lines
        for line in lines:
            token, bits = line.split("\t")
            assert set(bits) <= {"0", "1"}

    def test_missing_corpus_source_is_an_error(self):
        with pytest.raises(SystemExit, match="--corpus or --synthetic"):
            main(["train", "--output", "/tmp/nowhere"])


class TestSweepCommand:
    def test_config_file_drives_a_tiny_sweep(self, tmp_path, capsys):
        from semcom.experiments import ExperimentConfig

        cfg = ExperimentConfig(
            experiment="snr",
            output_dir=str(tmp_path / "out"),
            corpus_pairs=120,
            corpus_vocab=25,
            snr_grid=(6.0, 14.0),
            entropy_offsets=(0.0,),
            eval_sentences=24,
            epochs=2,
        )
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(cfg.to_json())

        code = main(["sweep", "snr", "--config", str(cfg_path)])
        out = capsys.readouterr().out
        assert code in (0, 1)  # verdict line decides; artifacts must exist either way
        assert ("PASS " in out) or ("FAIL " in out)
        assert (tmp_path / "out" / "results.csv").exists()
        assert (tmp_path / "out" / "figure.png").exists()
        assert (tmp_path / "out" / "config.resolved.json").exists()

    def test_output_flag_overrides_config_dir(self, tmp_path, capsys):
        from semcom.experiments import ExperimentConfig

        cfg = ExperimentConfig(
            experiment="snr",
            output_dir=str(tmp_path / "ignored"),
            corpus_pairs=120,
            corpus_vocab=25,
            snr_grid=(10.0,),
            entropy_offsets=(0.0,),
            eval_sentences=24,
            epochs=1,
        )
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(cfg.to_json())
        main(["sweep", "snr", "--config", str(cfg_path), "--output", str(tmp_path / "used")])
        capsys.readouterr()
        assert (tmp_path / "used" / "results.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_sweep_without_output_or_config_is_an_error(self):
        with pytest.raises(SystemExit, match="--output"):
            main(["sweep", "snr"])

    def test_unknown_experiment_is_rejected_by_the_parser(self, capsys):
        with pytest.raises(SystemExit):
            main(["sweep", "warp"])
        assert "invalid choice" in capsys.readouterr().err
