import numpy as np
import pytest

from connsim.autoencoder import TrainConfig, desk_specs, train_autoencoder
from connsim.io.glyphs import CANONICAL, LabeledDataset


@pytest.fixture(scope="session")
def glyph_ae():
    """Desk autoencoder memorizing the first three canonical glyphs."""
    data = CANONICAL[:3].copy()
    model, history = train_autoencoder(data, desk_specs(), TrainConfig(seed=0))
    return model, history, LabeledDataset(data, np.arange(3), 3)


@pytest.fixture(scope="session")
def pair_ae():
    """Desk autoencoder memorizing two differently labeled glyphs."""
    data = CANONICAL[:2].copy()
    model, _ = train_autoencoder(data, desk_specs(), TrainConfig(seed=1))
    return model, LabeledDataset(data, np.arange(2), 2)
