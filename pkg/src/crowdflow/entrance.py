"""Reservoir -> buffer -> walkway arrival process.

A zero-dimensional reservoir holding ``S`` not-yet-arrived pedestrians feeds
the entrance buffer at rate ``f = sigma(S) * (1 - I / C)``; the buffer mass
``I`` is spread uniformly over the buffer elements after every transport
step, and the transport itself carries it into the walkway.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh

log = logging.getLogger(__name__)


def sigma(S: float, F: float, p: float, N: float) -> float:
    """Ideal arrival rate: ``F`` while ``S/N >= p``, then a linear fade to zero."""
    if S <= 0.0 or N <= 0.0:
        return 0.0
    frac = S / N
    if frac >= p:
        return F
    return F * frac / p


def arrival_rate(S: float, I: float, F: float, p: float, N: float, C: float) -> float:
    """Reservoir emptying rate; negative (mass flows back) when the buffer exceeds capacity."""
    return sigma(S, F, p, N) * (1.0 - I / C)


@dataclass
class EntranceState:
    S: float  # reservoir mass
    I: float  # buffer mass after the last overwrite
    C: float  # buffer capacity
    F: float
    p: float
    N: float
    region: np.ndarray  # buffer element indices
    phi_prev: float = 0.0  # walkway mass after the previous step

    def __post_init__(self):
        if self.S < 0:
            raise ValueError("reservoir mass S must be nonnegative")
        if not self.C > 0:
            raise ValueError("buffer capacity C must be positive")
        if not 0 < self.p < 1:
            raise ValueError("fade-out ratio p must lie in (0, 1)")
        if self.F < 0:
            raise ValueError("ideal inflow F must be nonnegative")
        self.region = np.asarray(self.region, dtype=np.int64)

    @classmethod
    def for_mesh(cls, mesh: TriMesh, N: float, F: float, p: float, rho_capacity: float,
                 S0: float | None = None) -> EntranceState:
        region = mesh.buffer_elements
        area = float(mesh.areas[region].sum())
        if area <= 0:
            raise ValueError("the mesh has no entrance buffer (zero measure)")
        return cls(S=N if S0 is None else S0, I=0.0, C=rho_capacity * area, F=F, p=p, N=N, region=region)

    def rate(self, I: float) -> float:
        return arrival_rate(self.S, I, self.F, self.p, self.N, self.C)


def entrance_step(state: EntranceState, rho: np.ndarray, mesh: TriMesh, dt: float) -> tuple[EntranceState, np.ndarray]:
    """Update reservoir and buffer after a transport step and overwrite the buffer density.

    ``rho`` is the density just evolved on walkway plus buffer. The buffer
    mass it implies already accounts for the buffer-to-walkway transfer of
    this step, so only the reservoir exchange ``dt * f`` is added to it.
    A new state and a new density array are returned.
    """
    reg = state.region
    areas = mesh.areas
    I_post = float(rho[reg] @ areas[reg])
    dom = mesh.region == 0
    phi = float(rho[dom] @ areas[dom])
    if state.F == 0.0:
        return EntranceState(state.S, I_post, state.C, state.F, state.p, state.N, reg, phi), rho
    flow = dt * state.rate(I_post)
    S_new = state.S - flow
    I_new = I_post + flow
    if I_new < 0.0:
        log.info("buffer mass %.3g < 0 clamped; deficit returned to the reservoir", I_new)
        S_new += I_new
        I_new = 0.0
    if S_new < 0.0:
        log.info("reservoir mass %.3g < 0 clamped; excess delivered to the buffer", S_new)
        I_new += S_new
        S_new = 0.0
    out = rho.copy()
    out[reg] = I_new / float(areas[reg].sum())
    return EntranceState(S_new, I_new, state.C, state.F, state.p, state.N, reg, phi), out
