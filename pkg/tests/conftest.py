import numpy as np
import pytest
import torch

from maskedit.data import FaceDataset, FaceSample
from maskedit.datamodel import toy_schema
from maskedit.networks import NetSpec, ParserSpec
from maskedit.toyfaces import make_toy_face


def small_netspec(resolution: int = 64, n_labels: int = 6) -> NetSpec:
    return NetSpec(
        resolution=resolution,
        n_labels=n_labels,
        base_channels=8,
        embed_channels=12,
        mask_feature_channels=16,
        background_channels=8,
        disc_base_channels=8,
        n_resblocks=1,
    )


def small_parserspec(resolution: int = 64, n_labels: int = 6) -> ParserSpec:
    return ParserSpec(resolution=resolution, n_labels=n_labels, base_channels=8, levels=2)


def make_toy_dataset(n: int, seed: int = 0, resolution: int = 64) -> FaceDataset:
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        f = make_toy_face(rng, resolution)
        samples.append(FaceSample(f"s{i:03d}", f.image, f.mask, f.landmarks, f.meta))
    return FaceDataset(toy_schema(), resolution, samples)


@pytest.fixture(scope="session")
def toy_dataset_16():
    return make_toy_dataset(16)


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)
