"""Thermoacoustic tomography with data on a circular arc: simulation, fast reconstruction, FBP."""
from .fastrecon import MODES, ReconstructionError, antidifferentiate, run_pipeline
from .forward import AcquisitionConfig, add_noise, apply_reduction, matched_radon_data, simulate_boundary_data
from .grids import AngularGrid, Image, ImageGrid, RadonData, RadonGrid, Sinogram, TimeGrid
from .metrics import projection_consistency, rel_error, smoothness_diagnostic
from .phantom import Disk, GaussianBump, Phantom, default_phantom, exact_radon_data
from .radon import FilterSpec, backproject, filter_projections, invert

__version__ = "0.1.0"

__all__ = [
    "MODES",
    "ReconstructionError",
    "antidifferentiate",
    "run_pipeline",
    "AcquisitionConfig",
    "add_noise",
    "apply_reduction",
    "matched_radon_data",
    "simulate_boundary_data",
    "AngularGrid",
    "Image",
    "ImageGrid",
    "RadonData",
    "RadonGrid",
    "Sinogram",
    "TimeGrid",
    "projection_consistency",
    "rel_error",
    "smoothness_diagnostic",
    "Disk",
    "GaussianBump",
    "Phantom",
    "default_phantom",
    "exact_radon_data",
    "FilterSpec",
    "backproject",
    "filter_projections",
    "invert",
]
