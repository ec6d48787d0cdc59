from .base import Backends, BackendManifest, GeneratorBackend, RegionSegmenter, build_backends
from .toy import ToyGenerator, ToyScorer, ToySegmenter, ToyWorld

__all__ = [
    "Backends",
    "BackendManifest",
    "GeneratorBackend",
    "RegionSegmenter",
    "ToyGenerator",
    "ToyScorer",
    "ToySegmenter",
    "ToyWorld",
    "build_backends",
]
