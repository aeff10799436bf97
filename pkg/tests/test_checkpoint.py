import numpy as np
import pytest

from ovhar.errors import FormatError
from ovhar.nn.checkpoint import load_checkpoint, read_tensors, save_checkpoint, write_tensors
from ovhar.nn.model import ModelConfig, RegressorModel


@pytest.fixture
def model():
    return RegressorModel(ModelConfig(in_channels=3, conv_filters=8, hidden_size=8, seed=5))


def test_round_trip_bit_exact(model, tmp_path):
    path = tmp_path / "model.ovhr"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.config == model.config
    for name, tensor in model.parameters().items():
        assert np.array_equal(tensor, loaded.parameters()[name]), name


def test_save_is_deterministic(model, tmp_path):
    save_checkpoint(model, tmp_path / "a.ovhr")
    save_checkpoint(model, tmp_path / "b.ovhr")
    assert (tmp_path / "a.ovhr").read_bytes() == (tmp_path / "b.ovhr").read_bytes()


def test_file_size_matches_parameter_count(model, tmp_path):
    path = tmp_path / "model.ovhr"
    save_checkpoint(model, path)
    n_params = sum(t.size for t in model.parameters().values()) + 2  # + meta scalars
    size = path.stat().st_size
    assert size >= n_params * 8
    # header + names + extents overhead stays small
    assert size < n_params * 8 + 1024


def test_corrupt_magic_rejected(model, tmp_path):
    path = tmp_path / "model.ovhr"
    save_checkpoint(model, path)
    blob = bytearray(path.read_bytes())
    blob[1] ^= 0x55
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError) as err:
        load_checkpoint(path)
    assert err.value.offset == 0


def test_truncation_rejected_with_offset(model, tmp_path):
    path = tmp_path / "model.ovhr"
    save_checkpoint(model, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FormatError) as err:
        load_checkpoint(path)
    assert "truncated" in str(err.value)
    assert err.value.offset is not None


def test_version_mismatch_rejected(model, tmp_path):
    path = tmp_path / "model.ovhr"
    save_checkpoint(model, path)
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="version"):
        load_checkpoint(path)


def test_generic_tensor_round_trip(tmp_path):
    tensors = {
        "a": np.arange(6, dtype=np.float64).reshape(2, 3),
        "b.nested.name": np.array([1e-300, -0.0, np.pi]),
    }
    path = tmp_path / "t.bin"
    write_tensors(path, tensors)
    loaded = read_tensors(path)
    assert set(loaded) == set(tensors)
    for name in tensors:
        assert np.array_equal(tensors[name], loaded[name])
        # -0.0 round-trips bitwise
        assert tensors[name].tobytes() == loaded[name].tobytes()


def test_missing_required_tensor(tmp_path):
    write_tensors(tmp_path / "t.ovhr", {"conv.weight": np.zeros((2, 2, 2))})
    with pytest.raises(FormatError, match="missing"):
        load_checkpoint(tmp_path / "t.ovhr")
