"""Simulation kernel backends.

Two interchangeable implementations of the path-simulation hot loop exist:

* ``_fastpath`` — a compiled Cython extension (per-path scalar loops,
  releases the GIL, ~an order of magnitude faster);
* ``reference`` — a pure-NumPy lockstep implementation.

Both consume the same counter-based random streams and mirror each other's
floating-point arithmetic operation for operation, so results agree to within
summation-order rounding (~1e-12 relative).  The compiled backend is selected
at import when available; set ``STOPRATE_KERNEL=python`` or
``STOPRATE_KERNEL=compiled`` to force a choice.
"""

import os

from . import reference

_forced = os.environ.get("STOPRATE_KERNEL", "").strip().lower()

if _forced == "python":
    fast = None
elif _forced == "compiled":
    from . import _fastpath as fast  # hard import error if forced but missing
else:
    try:
        from . import _fastpath as fast
    except ImportError:
        fast = None

BACKEND = "compiled" if fast is not None else "python"


def run_chunk(*args, backend=None):
    """Dispatch one path chunk to the selected backend."""
    use = backend or BACKEND
    if use == "compiled":
        if fast is None:
            raise RuntimeError("compiled kernel requested but not built")
        return fast.run_chunk(*args)
    return reference.run_chunk(*args)
