"""Kernel backend selection: compiled extension if built, numpy fallback otherwise.

Set ``NILLAB_BACKEND=compiled`` or ``NILLAB_BACKEND=numpy`` to force a choice
(the former raises if the extension is missing). The active backend name is
recorded in every CLI result envelope.
"""

import os

from . import _kernels_np

_requested = os.environ.get("NILLAB_BACKEND", "auto").lower()

kernels = None
name = None

if _requested in ("auto", "compiled"):
    try:
        from . import _core as _compiled
        kernels = _compiled
        name = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "NILLAB_BACKEND=compiled but the nillab._core extension is not built; "
                "run `pip install -e . --no-build-isolation` or `python setup.py build_ext --inplace`"
            )
if kernels is None:
    if _requested not in ("auto", "numpy"):
        raise ValueError(f"unknown NILLAB_BACKEND value: {_requested!r}")
    kernels = _kernels_np
    name = "numpy"

numpy_kernels = _kernels_np


def compiled_kernels_or_none():
    try:
        from . import _core
        return _core
    except ImportError:
        return None
