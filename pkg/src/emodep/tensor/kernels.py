"""Recurrent kernel backend, chosen once at import.

The compiled extension is used when it imports; ``EMODEP_KERNELS=python``
forces the numpy implementation.
"""

import os

from . import _kernels_py

python_backend = _kernels_py
compiled_backend = None

try:
    from . import _kernels_ext as compiled_backend  # type: ignore[no-redef]
except ImportError:  # not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("EMODEP_KERNELS", "").lower() != "python":
    backend = compiled_backend
else:
    backend = python_backend

BACKEND = backend.BACKEND
lstm_forward = backend.lstm_forward
lstm_backward = backend.lstm_backward
gru_forward = backend.gru_forward
gru_backward = backend.gru_backward
