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

__all__ = [
    "ModelInfo",
    "SynthManifest",
    "read_activations",
    "read_dictionary",
    "read_manifest",
    "read_model",
    "write_activations",
    "write_dictionary",
    "write_json",
    "write_manifest",
    "write_model",
    "RunConfig",
    "SynthConfig",
    "parse_list",
    "read_tensor",
    "write_tensor",
]
