import json
import math

import numpy as np
import pytest

import tripod


def test_version_and_config_roundtrip():
    assert tripod.__version__
    cfg = tripod.config(lambda_klm=1e-4)
    assert cfg["lambda_klm"] == 1e-4
    assert tripod.config_hash(json.dumps(cfg)) != tripod.config_hash(tripod.default_config())


def test_unknown_key_is_rejected():
    with pytest.raises(ValueError):
        tripod.config(lambda_kl=1.0)


def test_fsq_tie_and_grid():
    c, z = tripod.fsq_quantize(np.zeros((1, 1)), 12)
    assert c[0, 0] == 0.0
    assert z[0, 0] == pytest.approx(1 / 11, abs=1e-15)
    grid = set(tripod.fsq_grid(12))
    _, z = tripod.fsq_quantize(np.random.default_rng(0).normal(size=(50, 3)) * 3, 12)
    assert all(v in grid for v in z.ravel())


def test_silverman_and_multiinformation():
    assert tripod.silverman_factor(64, 2) == 0.25
    rng = np.random.default_rng(1)
    a = rng.normal(size=512)
    assert tripod.multiinformation(np.stack([a, a], axis=1)) > 0.5
    assert abs(tripod.multiinformation(rng.normal(size=(512, 2)))) < 0.1


def test_plugin_mi_and_identity_metrics():
    a = [0, 1, 2, 3] * 4
    assert tripod.plugin_mi(a, a) == pytest.approx(math.log(4))
    sources, images = tripod.enumerate_dataset("blobs")
    assert sources.shape == (1024, 4)
    assert images.shape == (1024, 16, 16)
    codes = sources.astype(float)
    r = tripod.evaluate_codes(sources.astype(float), codes, codes)
    assert r["info_m"] == 1.0 and r["d"] == 1.0


def test_normalized_ratio():
    assert tripod.normalized_hessian_ratio(np.array([[0.0, 1.0], [1.0, 0.0]]), [1.0, 1.0]) == 1.0


def test_trainer_steps_and_checkpoint(tmp_path):
    cfg = tripod.config(hidden_width=16, hidden_layers=1, batch_size=8, eval_samples=128)
    t = tripod.Trainer(cfg)
    log = t.step()
    assert log["step"] == 1 and math.isfinite(log["loss"])
    path = str(tmp_path / "a.trpd")
    t.save(path)
    assert tripod.Trainer.load(path).step_count == 1


def test_train_summary_and_oracle_checkpoint(tmp_path):
    summary = tripod.train(tripod.config(hidden_width=8, hidden_layers=1, batch_size=8, max_updates=2,
                                         eval_every=2, eval_samples=128, psnr_threshold=0.0))
    assert [e["step"] for e in summary["evaluations"]] == [0, 2]
    path = str(tmp_path / "oracle.trpd")
    tripod.make_oracle_checkpoint("blobs", path)
    assert tripod.evaluate_checkpoint(path)["info_m"] == 1.0


def test_oracle_suite():
    passed, checks = tripod.run_suite("kde")
    assert passed and checks
