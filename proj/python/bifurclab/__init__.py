"""Lyapunov spectra, bifurcation currents and proximal stability for
holomorphic SL(d, C) representation families."""

from ._core import (
    BifurcError,
    Family,
    calibrate,
    check_proximal,
    eigen_moduli,
    set_threads,
    __version__,
)

__all__ = [
    "BifurcError",
    "Family",
    "calibrate",
    "check_proximal",
    "eigen_moduli",
    "set_threads",
    "__version__",
]
