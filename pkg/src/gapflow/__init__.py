"""Matrix product state parent Hamiltonians, their gaps, and gapped paths between them."""
__version__ = "0.1.0"

from .transfer import KrausTuple, gap_constants, normalize, spectral_data, wielandt_index  # noqa: E402

__all__ = ["KrausTuple", "gap_constants", "normalize", "spectral_data", "wielandt_index", "__version__"]
