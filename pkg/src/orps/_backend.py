"""Select the compiled kernels when available, else the numpy fallback."""
import os

BACKEND = "python"

if os.environ.get("ORPS_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import affine_sweep, expm_batch, spectral_norm_batch
else:
    try:
        from ._ckernels import affine_sweep, expm_batch, spectral_norm_batch
        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._pykernels import affine_sweep, expm_batch, spectral_norm_batch

__all__ = ["BACKEND", "affine_sweep", "expm_batch", "spectral_norm_batch"]
