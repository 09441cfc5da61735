"""Tucker-compressed multiband rasters with moving-window biodiversity indices.

The package stacks RED/NIR satellite bands into order-3 tensors, compresses
them with truncated or sequentially truncated Tucker decompositions, derives
NDVI from the (possibly reconstructed) bands, computes Rao's quadratic
entropy and Renyi entropy over moving windows, and quantifies how much the
lossy compression perturbs those biodiversity estimates.
"""

from .analysis import ErrorRecord, ErrorStats, emit_report, map_error, summarize
from .biodiv import (
    AbundanceTable,
    Border,
    IndexMap,
    WindowSpec,
    rao_q,
    register_distance,
    renyi,
    window_abundances,
)
from .hosvd import (
    Method,
    StorageCost,
    TuckerFactors,
    TuckerFormatError,
    error_upper_bound,
    exact_error,
    read_tucker,
    reconstruct,
    st_hosvd,
    storage_cost,
    t_hosvd,
    write_tucker,
)
from .raster import (
    NODATA,
    BandStack,
    Layout,
    Raster,
    RasterFormatError,
    extract_bands,
    ndvi,
    read_csv,
    read_raster,
    stack_bands,
    write_csv,
    write_raster,
)
from .tensor import fold, frobenius_norm, general_flatten, mode_dot, multi_mode_dot, unfold
from .tsvd import TruncatedSVD, full_singular_values, truncated_svd

__version__ = "0.1.0"
