"""Hot evaluation kernel, compiled when available.

Set ``DSPACE_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _rules_py

BACKEND = "python"
RuleKernel = _rules_py.RuleKernel

if os.environ.get("DSPACE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._rules import RuleKernel  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

PyRuleKernel = _rules_py.RuleKernel


def available_backends() -> dict[str, type]:
    out: dict[str, type] = {"python": _rules_py.RuleKernel}
    try:
        from ._rules import RuleKernel as compiled

        out["cython"] = compiled
    except ImportError:
        pass
    return out


__all__ = ["BACKEND", "RuleKernel", "PyRuleKernel", "available_backends"]
