"""Numeric kernel backends.

Two interchangeable implementations of the hot loops: a compiled Cython
extension (``_fast``) and a pure numpy reference (``reference``). Selection
happens once at import via VISITSOLVE_BACKEND:

  auto        compiled if available, else reference (default)
  fast        compiled, ImportError if the extension is missing
  reference   pure numpy

Both implement the same floating-point operation sequence per node (the
extension is built with FMA contraction off), so results agree to within
accumulation-order roundoff; tests pin the gap at 1e-12.
"""

from __future__ import annotations

import os

from . import reference

_choice = os.environ.get("VISITSOLVE_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "fast", "reference"):
    raise RuntimeError(f"VISITSOLVE_BACKEND must be auto|fast|reference, got {_choice!r}")

_impl = None
name = "reference"
if _choice in ("auto", "fast"):
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        name = "fast"
    except ImportError:
        if _choice == "fast":
            raise RuntimeError(
                "VISITSOLVE_BACKEND=fast but the compiled extension is not available"
            )
        _impl = None
if _impl is None:
    _impl = reference
    name = "reference"

interp_1d = _impl.interp_1d
interp_2d = _impl.interp_2d
hjb_quadratic_1d = _impl.hjb_quadratic_1d
hjb_quadratic_2d = _impl.hjb_quadratic_2d
scatter_1d = _impl.scatter_1d
scatter_2d = _impl.scatter_2d


def backend_name() -> str:
    return name


def available_backends() -> list[str]:
    out = ["reference"]
    try:
        from . import _fast  # noqa: F401

        out.insert(0, "fast")
    except ImportError:
        pass
    return out
