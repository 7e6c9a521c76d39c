import pytest

from btfccl.checkpoint import save_checkpoint
from btfccl.cli import main
from btfccl.data import load_split, write_examples
from btfccl.decoding import score_corpus
from btfccl.synthetic import overfit_corpus


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "toy.txt"
    write_examples(path, [(ex.sentence.tokens, ex.triplets) for ex in overfit_corpus()])
    return path


def write_config(tmp_path, corpus_file, **extra):
    lines = {"train": corpus_file.name, "valid": corpus_file.name, "checkpoint": "model.btf",
             "d_model": 16, "n_layers": 1, "n_heads": 2, "d_ff": 32, "d_table": 12, "n_slices": 4,
             "mmcnn_blocks": 1, "epochs": 2, "batch_size": 4}
    lines.update(extra)
    path = tmp_path / "run.cfg"
    path.write_text("# toy run\n" + "".join(f"{k} = {v}\n" for k, v in lines.items()))
    return path


@pytest.fixture(scope="module")
def trained_checkpoint(overfit_run, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "overfit.btf"
    save_checkpoint(path, overfit_run[0].checkpoint)
    return path


def test_train_writes_checkpoint_and_reports_best(tmp_path, corpus_file, capsys):
    cfg = write_config(tmp_path, corpus_file)
    assert main(["train", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert (tmp_path / "model.btf").is_file()
    assert out[1].split() == ["epoch", "L_CL", "L_S", "L_E", "L_SP", "total", "P", "R", "F1"]
    assert [line.split()[0] for line in out[2:4]] == ["1", "2"]
    assert out[-1].startswith("best epoch ") and out[-1].endswith("model.btf")


def test_train_without_contrastive_logs_zero(tmp_path, corpus_file, capsys):
    cfg = write_config(tmp_path, corpus_file, ccl_enabled="false", epochs=1)
    assert main(["train", "--config", str(cfg)]) == 0
    row = capsys.readouterr().out.splitlines()[2].split()
    assert row[1] == "0.0000"


def test_train_missing_data_file(tmp_path, corpus_file, capsys):
    cfg = write_config(tmp_path, corpus_file, train="absent.txt")
    assert main(["train", "--config", str(cfg)]) == 2
    assert "'train'" in capsys.readouterr().err


def test_train_bad_config_value(tmp_path, corpus_file, capsys):
    cfg = write_config(tmp_path, corpus_file, d_model=-4)
    assert main(["train", "--config", str(cfg)]) == 1
    assert "d_model" in capsys.readouterr().err


def test_train_unknown_key(tmp_path, corpus_file, capsys):
    cfg = write_config(tmp_path, corpus_file, learning_rte=0.1)
    assert main(["train", "--config", str(cfg)]) == 1
    assert "learning_rte" in capsys.readouterr().err


def test_malformed_data_line_reports_location(tmp_path, corpus_file, capsys):
    corpus_file.write_text(corpus_file.read_text() + "no separator here\n")
    cfg = write_config(tmp_path, corpus_file)
    assert main(["train", "--config", str(cfg)]) == 2
    assert "toy.txt:9" in capsys.readouterr().err


def test_bad_magic(tmp_path, capsys):
    path = tmp_path / "junk.btf"
    path.write_bytes(b"JUNK" + bytes(12))
    assert main(["inspect", "--checkpoint", str(path)]) == 1
    assert "bad magic" in capsys.readouterr().err


def test_missing_checkpoint(tmp_path, capsys):
    assert main(["predict", "--checkpoint", str(tmp_path / "nope.btf"), "--text", "hi"]) == 1


def test_eval_on_empty_file(trained_checkpoint, tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["eval", "--checkpoint", str(trained_checkpoint), "--data", str(empty)]) == 0
    out = capsys.readouterr().out
    assert "tp 0" in out and "f1 0.0000" in out


def test_eval_output_rescores_identically(trained_checkpoint, corpus_file, tmp_path, capsys):
    preds_path = tmp_path / "preds.txt"
    assert main(["eval", "--checkpoint", str(trained_checkpoint), "--data", str(corpus_file),
                 "--output", str(preds_path)]) == 0
    printed = capsys.readouterr().out.strip()
    gold, _ = load_split(corpus_file)
    preds, _ = load_split(preds_path)
    report = score_corpus([ex.triplets for ex in preds], [ex.triplets for ex in gold])
    assert report.format() == printed


def test_predict_memorised_sentence(trained_checkpoint, capsys):
    args = ["predict", "--checkpoint", str(trained_checkpoint), "--text", "the pizza was delicious"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert first.strip() == "(pizza, delicious, POSITIVE)"
    assert main(args) == 0
    assert capsys.readouterr().out == first


def test_predict_prints_placeholder_or_triplets(trained_checkpoint, capsys):
    assert main(["predict", "--checkpoint", str(trained_checkpoint), "--text", "zzz qqq"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == ["(no triplets)"] or all(line.startswith("(") for line in lines)


def test_predict_too_long(trained_checkpoint, capsys):
    assert main(["predict", "--checkpoint", str(trained_checkpoint), "--text", "w " * 101]) == 2


def test_inspect_checkpoint_and_data(trained_checkpoint, corpus_file, capsys):
    assert main(["inspect", "--checkpoint", str(trained_checkpoint), "--data", str(corpus_file)]) == 0
    out = capsys.readouterr().out
    assert "format version 1" in out and "encoder.tok_embed" in out
    assert "toy.txt" in out


def test_inspect_needs_an_argument(capsys):
    assert main(["inspect"]) == 1


def test_inspect_flags_reference_mismatch(tmp_path, corpus_file, capsys):
    target = tmp_path / "14res" / "train_triplets.txt"
    target.parent.mkdir()
    target.write_text(corpus_file.read_text())
    assert main(["inspect", "--data", str(target)]) == 2
    assert "14res/train: reference (1266, 1692, 166, 480) -> MISMATCH" in capsys.readouterr().out


def test_train_scores_test_split_and_writes_predictions(tmp_path, corpus_file, capsys):
    cfg = write_config(tmp_path, corpus_file, epochs=1, test=corpus_file.name, output="test_preds.txt")
    assert main(["train", "--config", str(cfg)]) == 0
    assert any(line.startswith("test  precision") for line in capsys.readouterr().out.splitlines())
    preds, _ = load_split(tmp_path / "test_preds.txt")
    assert [ex.sentence.tokens for ex in preds] == [ex.sentence.tokens for ex in overfit_corpus()]
