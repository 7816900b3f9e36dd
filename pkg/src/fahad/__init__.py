"""Two-dimensional direction finding with a moving array behind a single RF chain.

The array steps through K positions; at each stop T random-phase analog combiners
compress the N element outputs into one RF chain. Angles are estimated either
directly from the compressed observations or from the virtual-array covariance
rebuilt from scalar measurements.
"""

from .errors import ConfigError, FahadError, ResolutionFailure, SingularInformation, SingularPhaseConfig
from .fast_music import fa_had_music, music_2d
from .frontend import acquire
from .geometry import AnglePair, ArrayGeometry, Trajectory, VirtualArray, build_virtual_array, random_trajectory
from .jad_music import jad_rd_music
from .scm_recon import reconstruct_full
from .waveform import SourceSet, make_pilots

__version__ = "0.1.0"

__all__ = [
    "AnglePair",
    "ArrayGeometry",
    "ConfigError",
    "FahadError",
    "ResolutionFailure",
    "SingularInformation",
    "SingularPhaseConfig",
    "SourceSet",
    "Trajectory",
    "VirtualArray",
    "acquire",
    "build_virtual_array",
    "fa_had_music",
    "jad_rd_music",
    "make_pilots",
    "music_2d",
    "random_trajectory",
    "reconstruct_full",
]
