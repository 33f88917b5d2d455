import json

import numpy as np
import pytest
from numpy.lib import format as npy_format
from pydantic import ValidationError

from krusco.exceptions import ConfigError, TensorFormatError
from krusco.storage.model_files import (
    ModelInfo,
    SynthManifest,
    read_activations,
    read_dictionary,
    read_manifest,
    read_model,
    write_activations,
    write_dictionary,
    write_json,
    write_manifest,
    write_model,
)
from krusco.storage.run_config import RunConfig, SynthConfig, parse_list
from krusco.storage.tensor_files import read_tensor, write_tensor


def write_raw(path, array, version=(1, 0)):
    with path.open("wb") as fh:
        npy_format.write_array(fh, array, version=version, allow_pickle=False)
    return path


class TestTensorFiles:
    """Test the NPY v1.0 reader and writer."""

    def test_roundtrip(self, tmp_path, rng):
        tensor = rng.standard_normal((2, 3, 4))
        path = write_tensor(tmp_path / "nested" / "t.npy", tensor)
        np.testing.assert_array_equal(read_tensor(path), tensor)
        assert path.read_bytes()[:8] == b"\x93NUMPY\x01\x00"

    def test_interoperates_with_numpy(self, tmp_path, rng):
        tensor = rng.standard_normal((5, 2))
        np.save(tmp_path / "np.npy", tensor)
        np.testing.assert_array_equal(read_tensor(tmp_path / "np.npy"), tensor)

    def test_big_endian_rejected(self, tmp_path):
        path = write_raw(tmp_path / "be.npy", np.zeros((2, 2), dtype=">f8"))
        with pytest.raises(TensorFormatError, match="descr"):
            read_tensor(path)

    def test_single_precision_rejected(self, tmp_path):
        path = write_raw(tmp_path / "f4.npy", np.zeros((2, 2), dtype="<f4"))
        with pytest.raises(TensorFormatError, match="descr"):
            read_tensor(path)

    def test_scalar_rejected(self, tmp_path):
        path = write_raw(tmp_path / "scalar.npy", np.array(1.0))
        with pytest.raises(TensorFormatError, match="shape"):
            read_tensor(path)

    def test_empty_extent_rejected(self, tmp_path):
        path = write_raw(tmp_path / "empty.npy", np.zeros((0, 3)))
        with pytest.raises(TensorFormatError, match="shape"):
            read_tensor(path)

    def test_fortran_order_rejected(self, tmp_path):
        path = write_raw(tmp_path / "f.npy", np.asfortranarray(np.zeros((3, 4))))
        with pytest.raises(TensorFormatError, match="fortran_order"):
            read_tensor(path)

    def test_version_rejected(self, tmp_path):
        path = write_raw(tmp_path / "v2.npy", np.zeros((2, 2)), version=(2, 0))
        with pytest.raises(TensorFormatError, match="version"):
            read_tensor(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.npy"
        path.write_bytes(b"not a tensor file at all")
        with pytest.raises(TensorFormatError, match="magic"):
            read_tensor(path)

    def test_truncated_payload(self, tmp_path):
        path = write_tensor(tmp_path / "t.npy", np.ones((4, 4)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(TensorFormatError, match="truncated"):
            read_tensor(path)

    def test_trailing_bytes(self, tmp_path):
        path = write_tensor(tmp_path / "t.npy", np.ones((2, 2)))
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(TensorFormatError, match="trailing"):
            read_tensor(path)


class TestModelFiles:
    """Test dictionary and activation directories."""

    def test_dictionary_roundtrip(self, tmp_path, small_problem):
        _, dictionary, _ = small_problem
        read = read_dictionary(write_dictionary(tmp_path / "dict", dictionary))
        np.testing.assert_array_equal(read.atoms, dictionary.atoms)

    def test_kruskal_activations_roundtrip(self, tmp_path, small_problem):
        _, _, acts = small_problem
        directory = write_activations(tmp_path / "acts", acts)
        assert sorted(p.name for p in directory.iterdir()) == [
            "activations.json", "mode_1.npy", "mode_2.npy", "mode_3.npy",
        ]
        read = read_activations(directory)
        assert read.rank == acts.rank
        for mode in range(acts.order):
            np.testing.assert_array_equal(read.mode_matrix(mode),
                                          acts.mode_matrix(mode))

    def test_dense_activations_roundtrip(self, tmp_path, small_problem):
        _, _, acts = small_problem
        dense = acts.to_dense()
        read = read_activations(write_activations(tmp_path / "dense", dense))
        np.testing.assert_array_equal(read, dense)

    def test_mode_file_shape_is_checked(self, tmp_path, small_problem):
        from krusco.exceptions import StructuralError

        _, _, acts = small_problem
        directory = write_activations(tmp_path / "acts", acts)
        write_tensor(directory / "mode_2.npy", np.zeros((1, 1)))
        with pytest.raises(StructuralError):
            read_activations(directory)

    def test_model_directory(self, tmp_path, small_problem):
        y, dictionary, acts = small_problem
        info = ModelInfo(model="kcsc", signal_shape=list(y.shape), config={"rank": 2},
                         loops=1, stop_reason="max_loops")
        write_model(tmp_path / "fit", dictionary, acts, info)
        read_dict, read_acts = read_model(tmp_path / "fit")
        np.testing.assert_array_equal(read_dict.atoms, dictionary.atoms)
        np.testing.assert_array_equal(read_acts.to_dense(), acts.to_dense())

    def test_manifest_directory(self, tmp_path, small_problem):
        y, dictionary, acts = small_problem
        manifest = SynthManifest(seed=0, n_atoms=2, rank=2, atom_shape=[2, 2, 3],
                                 signal_shape=list(y.shape), activation_shape=[3, 4, 2],
                                 density=0.5, noise_sigma=0.0, std_range=(1.0, 10.0))
        write_manifest(tmp_path, manifest)
        write_dictionary(tmp_path / manifest.dictionary, dictionary)
        write_activations(tmp_path / manifest.activations, acts)
        assert read_manifest(tmp_path) == manifest
        read_dict, _ = read_model(tmp_path)
        assert read_dict.n_atoms == 2

    def test_missing_model(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_model(tmp_path)

    def test_json_is_deterministic(self, tmp_path):
        path = write_json(tmp_path / "a.json", {"b": 1, "a": [1, 2]})
        text = path.read_text()
        assert text.endswith("\n")
        assert list(json.loads(text)) == ["a", "b"]


class TestRunConfig:
    """Test fit configuration files and overrides."""

    def test_parse_list(self):
        assert parse_list("1, 2,3", int) == [1, 2, 3]
        assert parse_list(None) is None
        with pytest.raises(ConfigError):
            parse_list("1,x")

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"atoms": 4, "rank": 2, "atom_shape": [2, 2],
                                    "loops": 5}))
        cfg = RunConfig.from_file(path).with_overrides(rank=3, loops=None)
        assert cfg.rank == 3
        assert cfg.loops == 5
        assert cfg.atoms == 4

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"atomz": 4}))
        with pytest.raises(ValidationError):
            RunConfig.from_file(path)

    @pytest.mark.parametrize("values", [
        {"atoms": 0},
        {"atom_shape": [2, 0]},
        {"loops": 0},
        {"baseline_alpha": -1.0},
        {"input": "/does/not/exist.npy"},
        {"freeze_dict": True},
    ])
    def test_invalid(self, values):
        with pytest.raises(ValidationError):
            RunConfig.model_validate(values)

    def test_defaults_fill_only_unset(self):
        cfg = RunConfig(rank=5).with_defaults(n_atoms=10, rank=4, atom_shape=(2, 4, 8))
        assert (cfg.atoms, cfg.rank, cfg.atom_shape) == (10, 5, [2, 4, 8])

    def test_to_kcsc_config(self):
        run = RunConfig(atoms=3, rank=2, atom_shape=[2, 3], z_max_iter=7, seed=9)
        cfg = run.to_kcsc_config()
        assert cfg.n_atoms == 3
        assert cfg.atom_shape == (2, 3)
        assert cfg.alpha == (0.1, 0.1)
        assert cfg.beta == (0.0, 0.0)
        assert cfg.z_budget.max_iter == 7
        assert cfg.seed == 9
        assert cfg.update_dictionary

    def test_sizes_required(self):
        with pytest.raises(ConfigError):
            RunConfig(atoms=3).to_kcsc_config()

    def test_alpha_length_checked(self):
        with pytest.raises(ConfigError):
            RunConfig(atoms=3, rank=2, atom_shape=[2, 3], alpha=[0.1]).to_kcsc_config()


class TestSynthConfig:
    """Test synthetic-instance configuration."""

    def test_defaults_are_reference_setup(self):
        spec = SynthConfig().to_spec()
        assert spec.n_atoms == 10
        assert spec.signal_shape == (16, 32, 64)
        assert spec.std_range == (1.0, 10.0)

    def test_overrides(self):
        spec = SynthConfig().with_overrides(atoms=3, atom_shape=[2, 2],
                                            signal_shape=[6, 6], noise=None).to_spec()
        assert spec.n_atoms == 3
        assert spec.activation_shape == (5, 5)

    def test_invalid_density(self):
        with pytest.raises(ValidationError):
            SynthConfig(density=1.5)
