"""Magnetic coupled NLS: evolution, ground states and verification."""

import numpy as np

from ._core import (
    EvolveConfig,
    Grid,
    GroundStateConfig,
    LocalSpec,
    NonlocalSpec,
    RunConfig,
    SolverError,
    System,
    ValidationError,
    evolve,
    global_existence_gate,
    load_config,
    measure_dispersive_decay,
    solve_groundstate,
    verify,
)

__all__ = [
    "EvolveConfig",
    "Grid",
    "GroundStateConfig",
    "LocalSpec",
    "NonlocalSpec",
    "RunConfig",
    "SolverError",
    "System",
    "ValidationError",
    "evolve",
    "gaussian",
    "global_existence_gate",
    "load_config",
    "measure_dispersive_decay",
    "solve_groundstate",
    "verify",
]


def gaussian(grid, amplitudes, width=1.0, centers=None):
    """Stack of Gaussians amp_j exp(-|x - c_j|^2 / (2 width^2)), shape (m, n, ..., n)."""
    coords = [grid.coordinate(d) for d in range(grid.dim)]
    out = np.empty((len(amplitudes),) + grid.shape, dtype=complex)
    for j, amp in enumerate(amplitudes):
        c = centers[j] if centers is not None else [0.0] * grid.dim
        r2 = sum((x - cd) ** 2 for x, cd in zip(coords, c))
        out[j] = amp * np.exp(-r2 / (2.0 * width**2))
    return out
