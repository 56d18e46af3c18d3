"""Read-only figure renderer for solver run directories."""

from .manifest import (RunManifest, VizError, load_run, read_ledger,
                       read_slice, read_trajectory)
from .render import (render_trajectory, render_transport, render_values,
                     state_masses)

__version__ = "0.1.0"

__all__ = [
    "RunManifest", "VizError", "load_run", "read_ledger", "read_slice",
    "read_trajectory", "render_values", "render_transport",
    "render_trajectory", "state_masses", "__version__",
]
