"""Boots a toy service instance for frontend integration tests.

Usage: python3 serve_fixture.py PORT CACHE_DIR
Trains a small toy checkpoint (seconds) and serves it on 127.0.0.1:PORT.
"""

import sys
from importlib import resources

import uvicorn

import stylemask as sm
from stylemask.backends import BackendManifest, build_backends
from stylemask.preselect import init_mask_matrix
from stylemask.service import create_app
from stylemask.trainer import TrainConfig, train


def main() -> None:
    port = int(sys.argv[1])
    cache_dir = sys.argv[2]
    data = resources.files("stylemask") / "data"
    catalog = sm.load_attribute_catalog(str(data / "toy_attributes.yaml"))
    manifest = BackendManifest.load(str(data / "toy_manifest.yaml"))
    backends = build_backends(manifest, catalog)
    gen = backends.generator
    matrix = init_mask_matrix(gen.n_channels, catalog.attributes, {}, gen.editable)
    checkpoint = train(
        matrix,
        TrainConfig(steps=40, learning_rate=0.05, optimizer="adam", seed=7),
        backends,
    )
    app = create_app(backends, checkpoint, cache_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()
