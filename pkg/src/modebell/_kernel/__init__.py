"""Backend selection for the per-pair sampling kernel.

The compiled Cython kernel is preferred when its extension module was
built; otherwise the vectorized numpy implementation takes over. Both
produce bit-identical output for identical inputs. Set the environment
variable MODEBELL_KERNEL to "python" or "compiled" before import to
force a backend (forcing "compiled" without the extension raises).
"""

from __future__ import annotations

import os

from . import _numpy_impl

_FORCE = os.environ.get("MODEBELL_KERNEL", "").strip().lower()

if _FORCE in ("python", "numpy"):
    _impl = _numpy_impl
    _backend = "python"
elif _FORCE in ("compiled", "cython", "c"):
    from . import _pairsampler as _impl  # noqa: F401  (ImportError is the contract)

    _backend = "compiled"
elif _FORCE:
    raise RuntimeError(
        f"MODEBELL_KERNEL={_FORCE!r} not understood; use 'python' or 'compiled'"
    )
else:
    try:
        from . import _pairsampler as _impl  # type: ignore[no-redef]

        _backend = "compiled"
    except ImportError:
        _impl = _numpy_impl
        _backend = "python"

sample_pairs = _impl.sample_pairs


def active_backend() -> str:
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return _backend
