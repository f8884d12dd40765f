"""Two-person image-exchange dynamics, memorizing autoencoders and attractor-based classifiers."""
from .dynamics import (
    AutoencoderMap,
    ConstantMap,
    OrbitReport,
    PersonMap,
    PlanarMap,
    detect_cycle,
    detect_first_type_orbit,
    detect_second_type_orbit,
    generate_W,
    interchange_sequence,
    percept,
    verify_orbit_loop,
)
from .kernels import BACKEND
from .network import ConnExperiment, run_conn, run_object_perception, second_type_study
from .numerics import RngStream, rng_substream
from .planar import PlanarConfig, random_planar_config, run_algorithm2

__version__ = "0.1.0"

__all__ = [
    "AutoencoderMap", "ConstantMap", "OrbitReport", "PersonMap", "PlanarMap", "detect_cycle",
    "detect_first_type_orbit", "detect_second_type_orbit", "generate_W", "interchange_sequence", "percept",
    "verify_orbit_loop", "BACKEND", "ConnExperiment", "run_conn", "run_object_perception",
    "second_type_study", "RngStream", "rng_substream", "PlanarConfig", "random_planar_config",
    "run_algorithm2", "__version__",
]
