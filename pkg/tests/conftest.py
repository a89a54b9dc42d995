"""Shared fixtures.

The expensive artifacts (seed-7 dataset on disk, the trained acceptance
model) are built once per session and reused by unit and acceptance tests
alike, mirroring the gen-data -> train -> eval pipeline exactly.
"""

from __future__ import annotations

from dataclasses import replace

import pytest

from aquasight.dataset import (
    generate_dataset,
    load_dataset,
    normalize_brightness,
    write_dataset,
)
from aquasight.network import build, reference_spec
from aquasight.training import TrainConfig, fit, split
from aquasight.weights import save_weights

ACCEPTANCE_SEED = 7


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("dataset") / "seed7"
    write_dataset(generate_dataset(ACCEPTANCE_SEED), out)
    return out


@pytest.fixture(scope="session")
def normalized_samples(dataset_dir):
    return [replace(s, pixels=normalize_brightness(s.pixels))
            for s in load_dataset(dataset_dir)]


@pytest.fixture(scope="session")
def acceptance_run(normalized_samples, tmp_path_factory):
    """Train the reference network once with the library defaults."""
    config = TrainConfig(seed=ACCEPTANCE_SEED)
    train_set, val_set = split(normalized_samples, config.split_fraction, config.seed)
    net = build(reference_spec(), init_seed=config.seed)
    net.train()
    report = fit(net, train_set, config, validation_samples=val_set)
    weights_path = tmp_path_factory.mktemp("model") / "acceptance.aqsw"
    save_weights(net, weights_path)
    return {
        "net": net,
        "report": report,
        "train_set": train_set,
        "val_set": val_set,
        "weights_path": weights_path,
        "config": config,
    }


@pytest.fixture(scope="session")
def acceptance_net(acceptance_run):
    return acceptance_run["net"]
