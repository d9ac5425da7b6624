"""Binary checkpoint format: round-trips, headers, corruption handling."""

import json
import struct

import numpy as np
import pytest

from gzsl_align import (
    CheckpointError,
    MlpSpec,
    config_digest,
    init_adam,
    init_model_params,
    load_checkpoint,
    save_checkpoint,
)


def _model(seed=0):
    return init_model_params(
        MlpSpec(layer_dims=(6, 4)),
        MlpSpec(layer_dims=(5, 4)),
        MlpSpec(layer_dims=(6, 8, 6)),
        seed=seed,
    )


def test_params_round_trip_bit_identically(tmp_path):
    params = _model(seed=3)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params, seed=3, epoch=17, config_hash="abc123")
    ck = load_checkpoint(path)
    assert ck.seed == 3 and ck.epoch == 17 and ck.config_hash == "abc123"
    assert ck.adam is None
    for a, b in zip(params.arrays(), ck.params.arrays()):
        assert np.array_equal(a, b)
    for (n1, _), (n2, _) in zip(params.nets(), ck.params.nets()):
        assert n1 == n2


def test_adam_state_round_trips(tmp_path):
    params = _model(seed=1)
    state = init_adam(params.arrays())
    rng = np.random.default_rng(0)
    for m, v in zip(state.m, state.v):
        m[:] = rng.standard_normal(m.shape)
        v[:] = rng.uniform(size=v.shape)
    state.step_count = 42
    path = tmp_path / "full.ckpt"
    hparams = {"lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8}
    save_checkpoint(path, params, seed=1, epoch=5, adam=state, adam_hparams=hparams)
    ck = load_checkpoint(path)
    assert ck.adam is not None and ck.adam.step_count == 42
    assert ck.adam_hparams["lr"] == 1e-3
    for a, b in zip(state.m + state.v, ck.adam.m + ck.adam.v):
        assert np.array_equal(a, b)


def test_saved_files_are_deterministic(tmp_path):
    params = _model(seed=2)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, params, seed=2, epoch=0)
    save_checkpoint(p2, params, seed=2, epoch=0)
    assert p1.read_bytes() == p2.read_bytes()


def test_wrong_magic_is_rejected(tmp_path):
    path = tmp_path / "bogus.ckpt"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_truncated_payload_is_rejected(tmp_path):
    params = _model(seed=4)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params, seed=4, epoch=1)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 16])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_header_is_inspectable_json(tmp_path):
    params = _model(seed=5)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params, seed=5, epoch=9)
    blob = path.read_bytes()
    assert blob[:8] == b"GZSLCKPT"
    (header_len,) = struct.unpack("<I", blob[8:12])
    header = json.loads(blob[12 : 12 + header_len])
    assert header["seed"] == 5 and header["epoch"] == 9
    assert set(header["specs"]) == {"encoder", "visual_map", "semantic_map"}


def test_config_digest_is_order_insensitive():
    a = config_digest({"lr": 0.001, "epochs": 100})
    b = config_digest({"epochs": 100, "lr": 0.001})
    c = config_digest({"epochs": 100, "lr": 0.002})
    assert a == b != c
    assert len(a) == 64  # sha256 hex
