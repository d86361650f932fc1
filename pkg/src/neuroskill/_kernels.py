"""Hot-kernel dispatch: the compiled extension when it was built, else numpy."""

try:
    from neuroskill import _ckernels as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    from neuroskill import _pykernels as _impl

    BACKEND = "python"

extrema_counts = _impl.extrema_counts
zero_crossings = _impl.zero_crossings
smo_solve = _impl.smo_solve


def available_backends():
    """Map backend name -> kernel module for every importable backend."""
    from neuroskill import _pykernels

    out = {"python": _pykernels}
    try:
        from neuroskill import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
