"""End-to-end smoke tests through the python bindings."""

import json

import numpy as np
import pytest

import fscil


def small_stream(seed=11):
    source = fscil.synth_blob_source(8, 30, 16, separation=6.0, seed=seed)
    split = fscil.SplitConfig()
    split.base_classes = 4
    split.incremental_sessions = 2
    split.way = 2
    split.shot = 3
    split.seed = seed
    return fscil.build_session_stream(source, split, 0.5)


def test_prototype_matches_numpy():
    rng = np.random.default_rng(0)
    emb = rng.normal(size=(20, 5))
    labels = [int(x) for x in rng.integers(0, 3, size=20)]
    w = fscil.prototype(emb, labels)
    for idx, cid in enumerate(w.class_registry):
        mask = np.array(labels) == cid
        np.testing.assert_allclose(w.rows[idx], emb[mask].mean(axis=0), atol=1e-12)


def test_session_stream_disjoint_classes():
    stream = small_stream()
    assert stream.num_sessions() == 3
    seen = set()
    for s in stream.sessions:
        ids = set(s.train.class_ids)
        assert not ids & seen
        seen |= ids


def test_summarize_empty_raises():
    with pytest.raises(Exception):
        fscil.summarize([], 50.0)


def test_expand_and_evaluate():
    stream = small_stream(seed=3)
    train = stream.sessions[0].train

    enc = fscil.init_encoder("tiny-mlp", fscil.ImageShape(1, 4, 4), 16, seed=9)
    cfg = fscil.PretrainConfig()
    cfg.epochs = 3
    cfg.batch_size = 16
    cfg.learning_rate = 0.05
    cfg.scale_s = 12.0
    cfg.seed = 9
    enc, _ = fscil.pretrain_base(train, enc, cfg)
    protos = fscil.reinit_classifier_with_prototypes(enc, train)
    assert protos.num_classes() == 4

    model = fscil.make_model(enc, protos, "cosine")
    reports = []
    for sid in range(stream.num_sessions()):
        if sid > 0:
            model = fscil.expand_classifier(model, stream.sessions[sid].train)
        reports.append(fscil.evaluate_session_single(stream, sid, model))
    assert model.classifier.num_classes() == 8

    summary = fscil.summarize(reports, reports[-1].top1)
    assert summary.avg == pytest.approx(np.mean([r.top1 for r in reports]))
    assert summary.diff == pytest.approx(0.0)


def test_pipeline_roundtrip(tmp_path):
    cfg_json = {
        "seed": 5,
        "out_dir": str(tmp_path / "run"),
        "arch": "tiny-mlp",
        "embed_dim": 16,
        "dataset": {"kind": "synthetic", "classes": 8, "per_class": 30, "dim": 16,
                    "separation": 6.0},
        "split": {"base_classes": 4, "incremental_sessions": 2, "way": 2, "shot": 3},
        "pretrain": {"epochs": 4, "batch_size": 16, "learning_rate": 0.05,
                     "scale_s": 12.0},
        "transfer": {"epochs": 2, "tasks_per_epoch": 4, "learning_rate": 0.01,
                     "task": {"way": 2, "shot": 3, "query_per_class": 3}},
        "eval": {"run_upper_bound": False, "upper_bound_last": 0.9},
    }
    cfg = fscil.config_from_json(json.dumps(cfg_json))
    manifest = fscil.run_experiment(cfg)
    summary = fscil.read_summary_file(manifest.summary_path)
    assert len(summary.reports) == 3
    assert 0.0 <= summary.avg <= 1.0

    # same seed, fresh directory: identical numbers
    cfg_json["out_dir"] = str(tmp_path / "run2")
    cfg2 = fscil.config_from_json(json.dumps(cfg_json))
    manifest2 = fscil.run_experiment(cfg2)
    summary2 = fscil.read_summary_file(manifest2.summary_path)
    assert summary.avg == summary2.avg
    assert [r.top1 for r in summary.reports] == [r.top1 for r in summary2.reports]
