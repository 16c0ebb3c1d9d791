import json

import pytest

from poselex.cli import main


def synth_into(root, name, extra=""):
    cfg = root / f"{name}.cfg"
    cfg.write_text(
        "synth_subjects = 4\n"
        "synth_instances = 2\n"
        "synth_classes = jumping_jack, squat, bow, kick, duck\n" + extra
    )
    data = root / name
    assert main(["synth", "--config", str(cfg), "--out", str(data)]) == 0
    return cfg, data


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    return (root, *synth_into(root, "plain"))


@pytest.fixture(scope="module")
def zero_shot(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_zs")
    return (root, *synth_into(root, "zs", "synth_heldout = duck\nsynth_composites = bow+kick\n"))


def common(cfg, data):
    return ["--config", str(cfg), "--manifest", str(data / "manifest.jsonl"),
            "--instructions", str(data / "instructions.json")]


def test_synth_outputs(dataset, zero_shot):
    _, _, data = dataset
    names = {p.name for p in data.iterdir()}
    assert names == {"manifest.jsonl", "instructions.json", "ground_truth.json", "skeleton_schema.json"}
    assert len(json.loads((data / "skeleton_schema.json").read_text())["joints"]) == 20
    assert len((data / "manifest.jsonl").read_text().splitlines()) == 4 * 2 * 5

    _, _, zs = zero_shot
    trained = json.loads((zs / "instructions.json").read_text())["classes"]
    novel = json.loads((zs / "novel_instructions.json").read_text())["classes"]
    assert set(trained) == {"jumping_jack", "squat", "bow", "kick"}
    assert set(novel) == {"duck", "bow then kick"}
    assert novel["bow then kick"] == trained["bow"] + trained["kick"]
    assert len((zs / "manifest.jsonl").read_text().splitlines()) == 4 * 2 * 6


def test_synth_is_byte_identical(dataset, tmp_path):
    _, cfg, data = dataset
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    for name in ("manifest.jsonl", "instructions.json", "ground_truth.json"):
        assert (tmp_path / name).read_bytes() == (data / name).read_bytes()


def test_train_then_classify(dataset):
    root, cfg, data = dataset
    out = root / "model"
    assert main(["train", *common(cfg, data), "--out", str(out)]) == 0
    assert {"codebook.json", "translation_table.json", "lexicon.csv", "loglik_trace.csv"} <= {p.name for p in out.iterdir()}
    assert main(["classify", *common(cfg, data), "--out", str(out)]) == 0
    records = [json.loads(x) for x in (out / "classification_report.jsonl").read_text().splitlines()]
    assert len(records) == 4 * 2 * 5
    assert sum(r["predicted"] == r["true"] for r in records) >= 0.9 * len(records)


def test_zero_shot_eval_and_classify(zero_shot, capsys):
    root, cfg, data = zero_shot
    novel = ["--novel", str(data / "novel_instructions.json")]
    ev = root / "eval"
    assert main(["eval", *common(cfg, data), *novel, "--out", str(ev)]) == 0
    report = json.loads((ev / "eval_report.json").read_text())
    assert report["n_test"] == 2 * 2 * 6 and report["lexicon_recovery"] is not None
    assert "bow then kick" in report["labels"]
    assert "accuracy" in capsys.readouterr().out

    out = root / "classified"
    assert main(["classify", *common(cfg, data), *novel, "--artifacts", str(ev), "--out", str(out)]) == 0
    records = [json.loads(x) for x in (out / "classification_report.jsonl").read_text().splitlines()]
    assert len(records) == 4 * 2 * 6
    assert {r["predicted"] for r in records} <= {"jumping_jack", "squat", "bow", "kick", "duck", "bow then kick"}
    composite = [r for r in records if r["true"] == "bow then kick"]
    assert all(set(r["log_scores"]) >= {"bow", "kick", "bow then kick"} for r in composite)

    # without the novel file only trained labels can come out
    plain = root / "plain_out"
    assert main(["classify", *common(cfg, data), "--artifacts", str(ev), "--out", str(plain)]) == 0
    records = [json.loads(x) for x in (plain / "classification_report.jsonl").read_text().splitlines()]
    assert {r["predicted"] for r in records} <= {"jumping_jack", "squat", "bow", "kick"}


def test_train_rejects_uncovered_classes(zero_shot, capsys):
    root, cfg, data = zero_shot
    assert main(["train", *common(cfg, data), "--out", str(root / "m")]) == 1
    assert "no instruction for class" in capsys.readouterr().err


def test_classify_empty_manifest(dataset, tmp_path):
    root, cfg, data = dataset
    model = root / "model3"
    assert main(["train", *common(cfg, data), "--out", str(model)]) == 0
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    args = ["classify", "--config", str(cfg), "--manifest", str(empty),
            "--instructions", str(data / "instructions.json"), "--artifacts", str(model), "--out", str(tmp_path)]
    assert main(args) == 0
    assert (tmp_path / "classification_report.jsonl").read_text() == ""


def test_sweep(dataset):
    root, cfg, data = dataset
    out = root / "sweep"
    cfg2 = root / "sweep.cfg"
    cfg2.write_text(cfg.read_text() + "sweep_multipliers = 1, 2\n")
    assert main(["sweep-k", *common(cfg2, data), "--out", str(out)]) == 0
    rows = (out / "sweep_k.csv").read_text().splitlines()
    assert rows[0] == "k,accuracy,seed" and len(rows) == 3


def test_errors_exit_nonzero(dataset, tmp_path, capsys):
    root, cfg, data = dataset
    # class without an instruction
    partial = tmp_path / "partial.json"
    classes = json.loads((data / "instructions.json").read_text())["classes"]
    del classes["squat"]
    partial.write_text(json.dumps({"classes": classes}))
    args = ["train", "--config", str(cfg), "--manifest", str(data / "manifest.jsonl"),
            "--instructions", str(partial), "--out", str(tmp_path / "x")]
    assert main(args) == 1
    assert "squat" in capsys.readouterr().err

    # unknown symbol in a novel instruction
    bad_novel = tmp_path / "novel.json"
    bad_novel.write_text(json.dumps({"classes": {"weird": ["T1", "T99"]}}))
    assert main(["train", *common(cfg, data), "--out", str(root / "model4")]) == 0
    args = ["classify", *common(cfg, data), "--novel", str(bad_novel), "--artifacts", str(root / "model4"),
            "--out", str(tmp_path)]
    assert main(args) == 1
    assert "T99" in capsys.readouterr().err

    # a single subject cannot be split
    one = tmp_path / "one.jsonl"
    lines = (data / "manifest.jsonl").read_text().splitlines()
    one.write_text("\n".join(x for x in lines if '"s01"' in x) + "\n")
    args = ["eval", "--config", str(cfg), "--manifest", str(one), "--instructions",
            str(data / "instructions.json"), "--out", str(tmp_path / "e")]
    assert main(args) == 1
    assert "two subjects" in capsys.readouterr().err

    # missing required option, unreadable config, unwritable output
    assert main(["train", "--config", str(cfg)]) == 1
    assert main(["train", "--config", str(tmp_path / "nope.cfg")]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["synth", "--config", str(cfg), "--out", str(blocker / "sub")]) == 1


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code != 0
