"""Illumination-adaptive RGB/LWIR fusion, detection evaluation, and tracking."""

from .frames import Frame, Modality, read_frame, write_frame
from .fusion import ALL_LEVELS, FusionLevel, blend
from .illumination import IlluminationCategory, LuxReading, categorize
from .registration import Homography, register

__version__ = "0.1.0"

__all__ = [
    "ALL_LEVELS",
    "Frame",
    "FusionLevel",
    "Homography",
    "IlluminationCategory",
    "LuxReading",
    "Modality",
    "blend",
    "categorize",
    "read_frame",
    "register",
    "write_frame",
    "__version__",
]
