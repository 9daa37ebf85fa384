"""Feature-extractor-mode export of CNN activations.

A pretrained backbone (AlexNet or VGG-16 from torchvision) is run in eval
mode and the activations of one fully connected layer (fc7-style,
4096-wide) are captured per image through a forward hook.  Grayscale
inputs are replicated across the three channels, resized to the model's
native input geometry, and normalized with the backbone's prescribed
per-channel statistics.  No training or fine-tuning happens here.

Weights come from a local state-dict file when given; otherwise the
architecture is instantiated with a fixed-seed random initialization,
which keeps the exporter fully deterministic in environments without
downloaded model zoos.
"""

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torchvision import models

from .formats import read_manifest, read_pgm, write_mmwfeat

# Per-channel statistics the torchvision model zoo prescribes.
_CHANNEL_MEAN = (0.485, 0.456, 0.406)
_CHANNEL_STD = (0.229, 0.224, 0.225)

_INIT_SEED = 0

MODELS = {
    "alexnet": {
        "factory": models.alexnet,
        "input_size": 227,
        "layers": {"fc6": "classifier.1", "fc7": "classifier.4"},
    },
    "vgg16": {
        "factory": models.vgg16,
        "input_size": 224,
        "layers": {"fc6": "classifier.0", "fc7": "classifier.3"},
    },
}


@dataclass(frozen=True)
class ExportJob:
    manifest: str
    model_id: str
    layer: str = "fc7"
    out_path: str = "features.feat"
    weights: str | None = None
    batch_size: int = 16

    def __post_init__(self):
        if self.model_id not in MODELS:
            raise ValueError(
                f"unknown model {self.model_id!r}; available: {sorted(MODELS)}"
            )
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def resolve_layer(model_id: str, layer: str) -> str:
    """Map an alias like 'fc7' to a torchvision module path."""
    aliases = MODELS[model_id]["layers"]
    return aliases.get(layer, layer)


def load_model(job: ExportJob):
    """Instantiate the backbone and locate the tap-point module."""
    spec = MODELS[job.model_id]
    torch.manual_seed(_INIT_SEED)
    model = spec["factory"](weights=None)
    if job.weights is not None:
        state = torch.load(job.weights, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    model.eval()
    module_path = resolve_layer(job.model_id, job.layer)
    named = dict(model.named_modules())
    if module_path not in named:
        raise ValueError(
            f"model {job.model_id!r} has no layer {module_path!r}; "
            f"aliases: {sorted(spec['layers'])}"
        )
    return model, named[module_path]


def preprocess(images, input_size: int) -> torch.Tensor:
    """Grayscale uint8 batch -> normalized 3-channel float tensor."""
    tensors = []
    for img in images:
        tensor = torch.from_numpy(np.ascontiguousarray(img)).float() / 255.0
        tensor = tensor.unsqueeze(0).unsqueeze(0)  # (1, 1, h, w)
        tensor = F.interpolate(
            tensor, size=(input_size, input_size), mode="bilinear", align_corners=False
        )
        tensors.append(tensor.repeat(1, 3, 1, 1))
    batch = torch.cat(tensors, dim=0)
    mean = torch.tensor(_CHANNEL_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(_CHANNEL_STD).view(1, 3, 1, 1)
    return (batch - mean) / std


def extract_activations(model, tap_module, batch: torch.Tensor) -> np.ndarray:
    """Forward the batch and capture the tap layer's output rows."""
    captured = []
    handle = tap_module.register_forward_hook(
        lambda module, inputs, output: captured.append(output.detach())
    )
    try:
        with torch.no_grad():
            model(batch)
    finally:
        handle.remove()
    activations = captured[-1]
    if activations.dim() != 2:
        activations = activations.flatten(start_dim=1)
    return activations.cpu().numpy().astype(np.float64)


def run_export(job: ExportJob) -> int:
    """Export one MMWFEAT record per manifest row; returns the record count.

    Unreadable images are collected into one error report (the output file
    is not written if any item fails).
    """
    torch.set_num_threads(1)  # reproducible CPU reductions
    rows = read_manifest(job.manifest)
    model, tap_module = load_model(job)
    input_size = MODELS[job.model_id]["input_size"]

    images = []
    failures = []
    for sample_id, _, _, image_path in rows:
        try:
            images.append(read_pgm(image_path))
        except (OSError, ValueError) as exc:
            failures.append(f"{sample_id}: {exc}")
            images.append(None)
    if failures:
        raise ExportError(failures)

    records = []
    for start in range(0, len(rows), job.batch_size):
        chunk = rows[start : start + job.batch_size]
        batch = preprocess(images[start : start + job.batch_size], input_size)
        activations = extract_activations(model, tap_module, batch)
        for (sample_id, subject_id, part, _), vector in zip(chunk, activations):
            records.append((subject_id, sample_id, part, vector))

    write_mmwfeat(job.out_path, records)
    return len(records)


class ExportError(Exception):
    """One message per failed manifest item."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__(f"{len(self.failures)} item(s) failed")
