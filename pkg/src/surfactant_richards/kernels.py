"""Backend selection for the element and pointwise kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise
the numpy module ``_pykernels``. Setting ``SURFACTANT_RICHARDS_PURE_PYTHON=1``
forces the fallback.

The pointwise constitutive kernel ``vg_fields`` always comes from numpy:
its vectorized exp/log beat the scalar compiled loop (see
``benchmarks/bench_kernels.py``). The compiled twin is kept for testing.
"""
import os

from . import _pykernels

if os.environ.get("SURFACTANT_RICHARDS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

vg_fields = _pykernels.vg_fields
mass_data = _impl.mass_data
stiffness_data = _impl.stiffness_data
advection_data = _impl.advection_data
flux_load = _impl.flux_load
source_load = _impl.source_load
