"""Hot loops of the path-sum engine.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy version
with the same signature and the same per-path multiplication order.
:func:`backend` returns the numba set unless numba is missing or the
environment sets ``EXPSEL_NUMBA=0``. Both sets stay importable as
``numba_impl`` / ``numpy_impl`` so they can be benchmarked against each other.

Array conventions (shared by both backends):

``tables``  complex (T, D, D); ``tables[t, j, i]`` is the step amplitude from
            configuration ``i`` on slice ``t`` to ``j`` on slice ``t + 1``,
            zero-padded to the largest slice size ``D``.
``sizes``   int64 (T + 1,) slice sizes.
``weights`` complex (T + 1, D) combined selection weight per configuration.

Paths are visited in lexicographic order of configuration indices with
slice 0 most significant.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

# numpy chunk size in flat path indices; bounds temporary memory
_CHUNK = 1 << 18


def _use_numba_from_env() -> bool:
    flag = os.environ.get("EXPSEL_NUMBA", "1").strip().lower()
    return HAS_NUMBA and flag not in ("0", "false", "no", "off")


# ---------------------------------------------------------------- numpy

def _np_path_sum_row(tables, sizes, weights, q0):
    T = sizes.shape[0] - 1
    out = np.zeros(sizes[T], dtype=np.complex128)
    rest = tuple(int(s) for s in sizes[1:])
    n = int(np.prod(rest, dtype=np.int64))
    for start in range(0, n, _CHUNK):
        idx = np.unravel_index(np.arange(start, min(start + _CHUNK, n)), rest)
        amp = np.full(idx[0].shape, weights[0, q0], dtype=np.complex128)
        prev = np.full(idx[0].shape, q0, dtype=np.int64)
        for t in range(T):
            cur = idx[t]
            amp = amp * tables[t, cur, prev]
            amp = amp * weights[t + 1, cur]
            prev = cur
        np.add.at(out, prev, amp)
    return out


def _np_path_amplitudes(tables, sizes, weights):
    T = sizes.shape[0] - 1
    shape = tuple(int(s) for s in sizes)
    n = int(np.prod(shape, dtype=np.int64))
    idx = np.unravel_index(np.arange(n), shape)
    amp = weights[0, idx[0]].astype(np.complex128)
    for t in range(T):
        amp = amp * tables[t, idx[t + 1], idx[t]]
        amp = amp * weights[t + 1, idx[t + 1]]
    return amp, idx[0].astype(np.int64), idx[T].astype(np.int64)


def _np_double_sum_block(amps, first, last, rho_i, rho_f, start, stop):
    acc = 0.0 + 0.0j
    conj = amps.conj()
    rows = max(1, _CHUNK // max(1, amps.shape[0]))
    for a in range(start, stop, rows):
        b = min(a + rows, stop)
        m = rho_i[first[a:b, None], first[None, :]] * rho_f[last[None, :], last[a:b, None]]
        terms = (amps[a:b, None] * conj[None, :]) * m
        acc += terms.sum()
    return acc


numpy_impl = SimpleNamespace(
    name="numpy",
    path_sum_row=_np_path_sum_row,
    path_amplitudes=_np_path_amplitudes,
    double_sum_block=_np_double_sum_block,
)

# ---------------------------------------------------------------- numba

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_path_sum_row(tables, sizes, weights, q0):
        T = sizes.shape[0] - 1
        out = np.zeros(sizes[T], dtype=np.complex128)
        idx = np.zeros(T + 1, dtype=np.int64)
        idx[0] = q0
        while True:
            amp = weights[0, q0]
            for t in range(T):
                amp = amp * tables[t, idx[t + 1], idx[t]]
                amp = amp * weights[t + 1, idx[t + 1]]
            out[idx[T]] += amp
            t = T
            while t >= 1:
                idx[t] += 1
                if idx[t] < sizes[t]:
                    break
                idx[t] = 0
                t -= 1
            if t == 0:
                break
        return out

    @njit(cache=True, nogil=True)
    def _nb_path_amplitudes(tables, sizes, weights):
        T = sizes.shape[0] - 1
        n = 1
        for s in sizes:
            n *= s
        amps = np.empty(n, dtype=np.complex128)
        first = np.empty(n, dtype=np.int64)
        last = np.empty(n, dtype=np.int64)
        idx = np.zeros(T + 1, dtype=np.int64)
        for p in range(n):
            amp = weights[0, idx[0]]
            for t in range(T):
                amp = amp * tables[t, idx[t + 1], idx[t]]
                amp = amp * weights[t + 1, idx[t + 1]]
            amps[p] = amp
            first[p] = idx[0]
            last[p] = idx[T]
            t = T
            while t >= 0:
                idx[t] += 1
                if idx[t] < sizes[t]:
                    break
                idx[t] = 0
                t -= 1
        return amps, first, last

    @njit(cache=True, nogil=True)
    def _nb_double_sum_block(amps, first, last, rho_i, rho_f, start, stop):
        acc = 0.0 + 0.0j
        n = amps.shape[0]
        for p in range(start, stop):
            ap = amps[p]
            if ap.real == 0.0 and ap.imag == 0.0:
                continue
            row = 0.0 + 0.0j
            for r in range(n):
                row += np.conj(amps[r]) * rho_i[first[p], first[r]] * rho_f[last[r], last[p]]
            acc += ap * row
        return acc

    numba_impl = SimpleNamespace(
        name="numba",
        path_sum_row=_nb_path_sum_row,
        path_amplitudes=_nb_path_amplitudes,
        double_sum_block=_nb_double_sum_block,
    )
else:  # pragma: no cover
    numba_impl = None


def backend(name: str | None = None) -> SimpleNamespace:
    """Kernel set by name (``"numba"`` / ``"numpy"``), or the env-selected one."""
    if name is None:
        name = "numba" if _use_numba_from_env() else "numpy"
    if name == "numba":
        if numba_impl is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return numba_impl
    if name == "numpy":
        return numpy_impl
    raise ValueError(f"unknown kernel backend {name!r}")
