"""Select the kernel implementation at import time.

The compiled ``_ckernels`` extension is used when it is importable. Setting
``SUSTAIN_MODELS_BACKEND=python`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

python_kernels = _kernels_py

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if os.environ.get("SUSTAIN_MODELS_BACKEND", "").lower() == "python" or compiled_kernels is None:
    kernels = python_kernels
    BACKEND = "python"
else:
    kernels = compiled_kernels
    BACKEND = "compiled"

ZERO_FLUX = _kernels_py.ZERO_FLUX
PERIODIC = _kernels_py.PERIODIC
ABSORBING = _kernels_py.ABSORBING
