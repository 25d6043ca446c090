"""Vision-based vineyard row navigation.

Thin Python layer over the C++ core: camera geometry, path heatmaps,
the BEV path-following controller, the kinematic vineyard simulator and the
trajectory metrics.
"""

from ._rownav import (
    CameraId,
    CameraModel,
    ConfigError,
    ControllerGains,
    DegenerateFitError,
    GroundHomography,
    RownavError,
    WorldPose,
    compute_command,
    default_camera,
    extract_path,
    fit_reference,
    format_cell,
    integrate,
    positional_deviation,
    project_point,
    render_heatmap,
    simulate,
)

__all__ = [
    "CameraId",
    "CameraModel",
    "ConfigError",
    "ControllerGains",
    "DegenerateFitError",
    "GroundHomography",
    "RownavError",
    "WorldPose",
    "compute_command",
    "default_camera",
    "extract_path",
    "fit_reference",
    "format_cell",
    "integrate",
    "positional_deviation",
    "project_point",
    "render_heatmap",
    "simulate",
]

__version__ = "0.1.0"
