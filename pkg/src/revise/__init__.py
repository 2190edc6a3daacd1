"""Interactive summary editing toolkit.

Subpackages cover the infill training-data pipeline, edit-region detection,
pluggable suggestion backends, evaluation metrics, the annotation-study
store, and the HTTP service tying them together for the browser portal.
"""

from revise.kernels import KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
