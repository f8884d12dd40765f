"""Datasets, configuration, reports and image dumps."""
from .config import ConfigError, RunConfig, defaults, load_config, parse_config
from .glyphs import LabeledDataset, restricted_subset, synth_glyphs
from .idx import read_idx, write_idx
from .pgm import read_pgm, write_pgm, write_strip

__all__ = [
    "ConfigError", "RunConfig", "defaults", "load_config", "parse_config",
    "LabeledDataset", "restricted_subset", "synth_glyphs", "read_idx", "write_idx",
    "read_pgm", "write_pgm", "write_strip",
]
