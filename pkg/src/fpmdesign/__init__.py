"""Fourier ptychographic microscopy: simulation, reconstruction, and learned
multiplexed LED illumination design.

The package simulates an LED-array microscope, reconstructs complex sample
fields from intensity stacks with an unrolled gradient-descent solver, and
learns LED brightness patterns by differentiating through that solver.
"""

__version__ = "0.1.0"

from .config import LossSpec, ReconConfig, SystemConfig, TrainConfig
from .designs import (DesignMatrix, context_mask, heuristic_design, load_design,
                      mirror_asymmetry, save_design, single_led_design)
from .errors import (ConfigError, DegenerateRowError, DivergenceError,
                     FingerprintError, FormatError, FpmError, GeometryError,
                     MetricError)
from .geometry import LedGeometry, build_led_geometry
from .metrics import band_filter, band_psnr, hf_psnr, lf_psnr
from .optics import (MeasurementStack, Pupil, add_shot_noise, adjoint_field,
                     forward_field, make_pupil, multiplex, simulate_single_led,
                     simulate_singles, simulate_stack)
from .phantoms import Dataset, Phantom, generate_phantom, make_dataset
from .recon import ReconTrace, cost, grad_x, reconstruct
from .training import TrainResult, grad_design, loss, project, train

__all__ = [
    "__version__",
    "SystemConfig", "ReconConfig", "TrainConfig", "LossSpec",
    "FpmError", "ConfigError", "GeometryError", "FormatError",
    "FingerprintError", "DivergenceError", "DegenerateRowError", "MetricError",
    "LedGeometry", "build_led_geometry",
    "Pupil", "MeasurementStack", "make_pupil", "forward_field", "adjoint_field",
    "simulate_single_led", "simulate_singles", "multiplex", "simulate_stack",
    "add_shot_noise",
    "ReconTrace", "cost", "grad_x", "reconstruct",
    "loss", "grad_design", "project", "train", "TrainResult",
    "DesignMatrix", "context_mask", "single_led_design", "heuristic_design",
    "save_design", "load_design", "mirror_asymmetry",
    "Phantom", "Dataset", "generate_phantom", "make_dataset",
    "band_filter", "band_psnr", "lf_psnr", "hf_psnr",
]
