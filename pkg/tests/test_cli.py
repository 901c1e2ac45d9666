"""In-process CLI runs against a single small domain."""

import numpy as np
import pytest

from kira import formats
from kira.cli import main

DOMAIN = "pathology"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One built + trained + indexed pathology workspace shared by the tests."""
    out = tmp_path_factory.mktemp("cli_out")
    base = ["--seed", "7", "--out", str(out), "--domains", DOMAIN]
    assert main(base + ["build-corpus"]) == 0
    assert main(base + ["train-encoder"]) == 0
    assert main(base + ["build-index"]) == 0
    return out


def test_build_corpus_writes_layout(workdir):
    root = workdir / DOMAIN
    for name in ("manifest.jsonl", "base.kiraemb", "concepts.json",
                 "eval_samples.json", "meta.json"):
        assert (root / name).exists(), name
    assert (root / "images" / f"{DOMAIN}-d00.kimg").exists()
    records = formats.read_jsonl(root / "manifest.jsonl")
    assert records[0]["chunk_id"] == f"{DOMAIN}-d00:doc"


def test_train_encoder_writes_head_and_trace(workdir):
    weight, bias = formats.read_head(workdir / DOMAIN / "head.kirahead")
    assert weight.shape == (256, 768)
    assert bias.shape == (256,)
    trace = (workdir / DOMAIN / "train_trace.csv").read_text().splitlines()
    assert trace[0] == "epoch,loss,recall_at_1"
    assert len(trace) == 51  # header + 50 epochs


def test_build_index_writes_projected_embeddings(workdir):
    ids, matrix = formats.read_embeddings(workdir / DOMAIN / "index.kiraemb")
    assert matrix.shape == (len(ids), 256)
    np.testing.assert_allclose(
        np.linalg.norm(matrix, axis=1), 1.0, atol=1e-6
    )


def test_query_prints_rationale_card(workdir, capsys):
    image = workdir / DOMAIN / "images" / f"{DOMAIN}-q00.kimg"
    code = main(
        ["--seed", "7", "--out", str(workdir), "query", str(image),
         "--text", "find a tissue slide image that shows benign",
         "--domain", DOMAIN]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("# Retrieval Rationale Card")
    assert "**Answer:**" in out
    assert "GROUNDED" in out


def test_query_missing_image_fails(workdir, capsys):
    with pytest.raises(SystemExit):
        main(
            ["--out", str(workdir), "query", str(workdir / "nope.kimg"),
             "--domain", DOMAIN]
        )


def test_unknown_domain_rejected(workdir):
    with pytest.raises(SystemExit):
        main(["--out", str(workdir), "--domains", "astrology", "build-corpus"])


def test_missing_corpus_is_reported_as_error(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "train-encoder"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_report_requires_prior_ablate(workdir):
    with pytest.raises(SystemExit):
        main(["--out", str(workdir), "report"])


def test_feedback_on_healthy_domain_skips_retraining(workdir, capsys):
    code = main(["--seed", "7", "--out", str(workdir), "--domains", DOMAIN,
                 "feedback"])
    assert code == 0
    assert "0 failures, retrained=False" in capsys.readouterr().out
    assert (workdir / "feedback.json").exists()
    assert not (workdir / DOMAIN / "head_feedback.kirahead").exists()
