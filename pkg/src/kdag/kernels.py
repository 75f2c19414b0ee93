"""Backend selection for the hot loops.

The compiled ``_speedups`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module is used. Setting ``KDAG_PURE_PYTHON=1``
forces the fallback. Both backends take parent CSR arrays and return equal
results; this module hides the array conversions.
"""

import os

import numpy as np

from kdag import _pykernels

POLICY_EVEN = _pykernels.POLICY_EVEN
POLICY_MPE = _pykernels.POLICY_MPE
POLICY_PE = _pykernels.POLICY_PE

_compiled = None
if not os.environ.get("KDAG_PURE_PYTHON"):
    try:
        from kdag import _speedups as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def to_csr(parents):
    """Flatten per-node parent collections into ``(ptr, idx)`` lists."""
    ptr = [0]
    idx = []
    for ps in parents:
        idx.extend(sorted(ps))
        ptr.append(len(idx))
    return ptr, idx


class Backend:
    """One concrete backend; ``python`` and ``cython`` instances exist."""

    def __init__(self, name):
        if name == "cython" and _compiled is None:
            raise ImportError("compiled kdag._speedups extension is not available")
        self.name = name
        self._mod = _compiled if name == "cython" else _pykernels

    def _arrays(self, parents):
        ptr, idx = to_csr(parents)
        if self.name == "cython":
            return np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64)
        return ptr, idx

    def _order(self, order):
        if self.name == "cython":
            return np.asarray(order, dtype=np.int64)
        return order

    def topological_order(self, parents):
        ptr, idx = self._arrays(parents)
        order = self._mod.topological_order(ptr, idx)
        return None if order is None else [int(v) for v in order]

    def path_ranges(self, parents, order=None):
        ptr, idx = self._arrays(parents)
        if order is None:
            order = self._mod.topological_order(ptr, idx)
            if order is None:
                raise ValueError("parent sets do not form a spanning DAG")
        s, l = self._mod.path_ranges(self._order(order), ptr, idx)
        return [int(x) for x in s], [int(x) for x in l]

    def dag_loads(self, parents, order=None):
        ptr, idx = self._arrays(parents)
        if order is None:
            order = self._mod.topological_order(ptr, idx)
            if order is None:
                raise ValueError("parent sets do not form a spanning DAG")
        return [float(x) for x in self._mod.dag_loads(self._order(order), ptr, idx)]

    def simulate(self, parents, order, policy, e_rx, e_tx, rate, e_init,
                 period=1, max_rounds=10**9, tol=0.0):
        ptr, idx = self._arrays(parents)
        rounds, residual, worst = self._mod.simulate(
            self._order(order), ptr, idx, int(policy), float(e_rx), float(e_tx),
            float(rate), float(e_init), int(period), int(max_rounds), float(tol))
        return int(rounds), [float(x) for x in residual], int(worst)


def get_backend(name=None):
    return Backend(name or BACKEND)


_default = get_backend()
topological_order = _default.topological_order
path_ranges = _default.path_ranges
dag_loads = _default.dag_loads
simulate = _default.simulate
