"""Kernel backend selection.

Imports the compiled extension when it was built, otherwise the pure
NumPy fallback. Set LSMRS_KERNELS=python before import to force the
fallback (used by the backend benchmark and the equivalence tests).
"""

import importlib
import os

if os.environ.get("LSMRS_KERNELS", "").lower() == "python":
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

BERNOULLI = _impl.BERNOULLI
POISSON = _impl.POISSON
pair_dists = _impl.pair_dists
pairs_loglik = _impl.pairs_loglik
node_loglik = _impl.node_loglik
node_loglik_delta = _impl.node_loglik_delta


def available_backends() -> dict:
    """Importable kernel backends keyed by name."""
    found = {"python": importlib.import_module("lsmrs._kernels_py")}
    try:
        found["cython"] = importlib.import_module("lsmrs._kernels")
    except ImportError:
        pass
    return found
