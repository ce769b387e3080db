"""Numerical backend selection: compiled extension or pure-numpy fallback.

The compiled module ``multitask._native`` is preferred when importable; the
env var ``MULTITASK_BACKEND`` (``native`` or ``python``) forces a choice.
Both implementations share one API; ``set_backend`` swaps them at runtime
(used by tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

KERNEL_RBF = _kernels_py.KERNEL_RBF
KERNEL_MATERN52 = _kernels_py.KERNEL_MATERN52

_impl = None


def _load(name: str):
    if name == "python":
        return _kernels_py
    if name == "native":
        from . import _native  # ImportError here means the extension is absent

        return _native
    raise ValueError(f"unknown backend {name!r}, expected 'native' or 'python'")


def _initial():
    forced = os.environ.get("MULTITASK_BACKEND", "").strip().lower()
    if forced:
        return _load(forced)
    try:
        return _load("native")
    except ImportError:
        return _kernels_py


def active_backend() -> str:
    return _impl.BACKEND_NAME


def set_backend(name: str) -> str:
    """Force a backend by name; returns the previously active one."""
    global _impl
    previous = _impl.BACKEND_NAME
    _impl = _load(name)
    return previous


def rbf_matrix(x1, x2, length_scale, signal_sd):
    return _impl.rbf_matrix(x1, x2, length_scale, signal_sd)


def matern52_matrix(x1, x2, length_scale, signal_sd):
    return _impl.matern52_matrix(x1, x2, length_scale, signal_sd)


def gp_log_marginal(x, y, length_scale, signal_sd, noise_sd, kernel_id, jitter):
    return _impl.gp_log_marginal(x, y, length_scale, signal_sd, noise_sd, kernel_id, jitter)


def piecewise_rbf_loglik(change_points, length_scales, signal_sds, noise_sds, x_sorted, y_sorted, jitter):
    return _impl.piecewise_rbf_loglik(
        change_points, length_scales, signal_sds, noise_sds, x_sorted, y_sorted, jitter
    )


_impl = _initial()
