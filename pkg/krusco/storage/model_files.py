"""On-disk layout of dictionaries, activations, fit outputs and synthetic manifests.

A dictionary directory holds ``atoms.npy`` (K, w_1, ..., w_p). An activation
directory holds ``activations.json`` plus either one ``mode_<l>.npy`` per mode
(the (m_l, K*R) mode matrix, column s = k*R + r) or a single ``dense.npy``
(K, m_1, ..., m_p) for the baseline.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from krusco.exceptions import StructuralError, TensorFormatError
from krusco.model.kcsc import ActivationSet, Dictionary
from krusco.storage.tensor_files import PathLike, read_tensor, write_tensor
from krusco.tensor.core import KruskalTensor

logger = structlog.get_logger(__name__)

ATOMS_FILE = "atoms.npy"
ACTIVATIONS_META = "activations.json"
DENSE_FILE = "dense.npy"
MODEL_FILE = "model.json"
MANIFEST_FILE = "manifest.json"

Activations = Union[ActivationSet, np.ndarray]


class ActivationMeta(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["kruskal", "dense"]
    n_atoms: int = Field(ge=1)
    shape: List[int]
    rank: Optional[int] = Field(default=None, ge=1)
    files: List[str]


class SynthManifest(BaseModel):
    """Description of a synthetic instance written by `krusco synth`"""

    model_config = ConfigDict(extra="forbid")

    seed: int
    n_atoms: int = Field(ge=1)
    rank: int = Field(ge=1)
    atom_shape: List[int]
    signal_shape: List[int]
    activation_shape: List[int]
    density: float = Field(gt=0, le=1)
    noise_sigma: float = Field(ge=0)
    std_range: Tuple[float, float]
    signal: str = "y.npy"
    dictionary: str = "truth_dict"
    activations: str = "truth_acts"


class ModelInfo(BaseModel):
    """Written next to a fitted model as model.json"""

    model_config = ConfigDict(extra="forbid")

    model: Literal["kcsc", "baseline"]
    signal_shape: List[int]
    config: Dict[str, Any]
    loops: int = Field(ge=0)
    stop_reason: str
    init_positions: List[List[int]] = Field(default_factory=list)
    initial_alpha_max: List[float] = Field(default_factory=list)
    dictionary: str = "dictionary"
    activations: str = "activations"


def write_json(path: PathLike, payload: Union[BaseModel, Dict[str, Any]]) -> Path:
    """Deterministic JSON (sorted keys, trailing newline)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_dictionary(directory: PathLike, dictionary: Dictionary) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(directory / ATOMS_FILE, dictionary.atoms)
    return directory


def read_dictionary(directory: PathLike) -> Dictionary:
    directory = Path(directory)
    atoms = read_tensor(directory / ATOMS_FILE)
    if atoms.ndim < 2:
        raise TensorFormatError(
            f"{directory / ATOMS_FILE}: expected (K, w_1, ..., w_p), got {atoms.shape}"
        )
    return Dictionary(atoms)


def write_activations(directory: PathLike, acts: Activations) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if isinstance(acts, ActivationSet):
        files = [f"mode_{mode + 1}.npy" for mode in range(acts.order)]
        for mode, name in enumerate(files):
            write_tensor(directory / name, acts.mode_matrix(mode))
        meta = ActivationMeta(kind="kruskal", n_atoms=acts.n_atoms,
                              shape=list(acts.shape), rank=acts.rank, files=files)
    else:
        dense = np.asarray(acts, dtype=np.float64)
        write_tensor(directory / DENSE_FILE, dense)
        meta = ActivationMeta(kind="dense", n_atoms=dense.shape[0],
                              shape=list(dense.shape[1:]), files=[DENSE_FILE])
    write_json(directory / ACTIVATIONS_META, meta)
    return directory


def read_activations(directory: PathLike) -> Activations:
    directory = Path(directory)
    meta = ActivationMeta.model_validate_json(
        (directory / ACTIVATIONS_META).read_text()
    )

    if meta.kind == "dense":
        dense = read_tensor(directory / meta.files[0])
        if dense.shape != (meta.n_atoms, *meta.shape):
            raise StructuralError(
                f"{directory}: dense activations {dense.shape} disagree with metadata "
                f"{(meta.n_atoms, *meta.shape)}"
            )
        return dense

    if meta.rank is None or len(meta.files) != len(meta.shape):
        raise StructuralError(
            f"{directory}: Kruskal metadata needs a rank and one file per mode"
        )
    rank = meta.rank
    matrices = [read_tensor(directory / name) for name in meta.files]
    for mode, matrix in enumerate(matrices):
        if matrix.shape != (meta.shape[mode], meta.n_atoms * rank):
            raise StructuralError(
                f"{directory / meta.files[mode]}: shape {matrix.shape} != "
                f"{(meta.shape[mode], meta.n_atoms * rank)}"
            )
    return ActivationSet(tuple(
        KruskalTensor(tuple(matrix[:, k * rank:(k + 1) * rank] for matrix in matrices))
        for k in range(meta.n_atoms)
    ))


def write_model(directory: PathLike, dictionary: Dictionary, acts: Activations,
                info: ModelInfo) -> Path:
    directory = Path(directory)
    write_dictionary(directory / info.dictionary, dictionary)
    write_activations(directory / info.activations, acts)
    write_json(directory / MODEL_FILE, info)
    logger.info("Model written", directory=str(directory), model=info.model)
    return directory


def read_model(directory: PathLike) -> Tuple[Dictionary, Activations]:
    """Dictionary and activations of a fit output or of a synthetic instance"""
    directory = Path(directory)
    if (directory / MODEL_FILE).exists():
        info = ModelInfo.model_validate_json((directory / MODEL_FILE).read_text())
        dict_dir, acts_dir = info.dictionary, info.activations
    elif (directory / MANIFEST_FILE).exists():
        manifest = read_manifest(directory)
        dict_dir, acts_dir = manifest.dictionary, manifest.activations
    else:
        raise FileNotFoundError(
            f"{directory}: neither {MODEL_FILE} nor {MANIFEST_FILE} found"
        )
    return read_dictionary(directory / dict_dir), read_activations(directory / acts_dir)


def write_manifest(directory: PathLike, manifest: SynthManifest) -> Path:
    return write_json(Path(directory) / MANIFEST_FILE, manifest)


def read_manifest(directory: PathLike) -> SynthManifest:
    text = (Path(directory) / MANIFEST_FILE).read_text()
    return SynthManifest.model_validate_json(text)
