from dataclasses import dataclass, field
from typing import List, Optional


@dataclass(frozen=True)
class Perturbation:
    kind: str = "none"  # none | gaussian | affine
    sigma: float = 0.0
    rotation_deg: float = 0.0
    translate_fraction: float = 0.0
    scale: float = 1.0


@dataclass
class ExtractionSpec:
    model: str
    layers: List[str]
    dataset: str
    out: str
    batch_size: int = 64
    device: str = "cpu"
    perturbation: Perturbation = field(default_factory=Perturbation)
    seed: int = 0
    limit: Optional[int] = None


def extract(spec: ExtractionSpec):
    """Run `spec.dataset` through `spec.model`, hook `spec.layers` and write a bundle.

    Model and dataset loading is framework specific and not provided here; build
    the per-layer arrays yourself and pass them to `write_bundle`.
    """
    raise NotImplementedError("model extraction is not bundled; use write_bundle with your own hooks")
