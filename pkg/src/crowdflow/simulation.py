"""Scenario description and the time loop.

A :class:`Scenario` holds physical (SI) inputs. :class:`Model` converts them
to the scaled frame (lengths / L, speeds / V, time / T with T = L / V) and
builds the mesh, desired velocity, interaction operator and transporter.
:func:`run` then alternates interaction, wall correction, transport and the
entrance update until every pedestrian has left or ``T_end`` is reached.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import mesh as meshmod
from .entrance import EntranceState, entrance_step
from .field import PotentialField, solve_potential
from .interaction import InteractionOperator, InteractionParams
from .mesh import DOMAIN, TriMesh
from .observables import EPS_MASS, RunMetrics, SectionSampler, egress_time, plateau_window
from .transport import Transporter, WallMode

log = logging.getLogger(__name__)


class NumericalAbort(RuntimeError):
    """Raised when the density stops being finite; carries the last valid state."""

    def __init__(self, msg, t, rho):
        super().__init__(msg)
        self.t = t
        self.rho = rho


@dataclass
class Scenario:
    # geometry
    kind: str = "rectangle"
    L: float = 100.0  # m
    B: float = 4.0  # m
    h: float = 0.5  # m, target element size
    buffer_depth: float | None = None  # m, defaults to 2R
    # crowd
    N: float = 1500.0
    V: float = 1.18  # m/s
    rho_C: float = 1.3  # ped/m^2
    # model
    c: float = 5e-4
    theta_deg: float = 2.0
    R: float = 2.0  # m
    alpha_deg: float = 45.0
    wall_mode: str = "scrape"
    # entrance
    F: float = 60.0  # ped/s, about ten times the free-flow capacity rho_C V B
    p: float = 0.05
    # time stepping
    safety: float = 0.9
    dt_max: float = 1.0  # s
    T_end: float = 1200.0  # s
    snapshot_every: float | None = None  # scaled time
    stop_at_egress: bool = True
    # bookkeeping
    outlet: str = "open"
    normalization: str = "mass"  # "mass" (total N) or "probability" (total 1)
    section_x: float = 0.5  # scaled abscissa of the chord-profile section
    seed: int = 0  # test oracles only; the simulator is deterministic

    FIELDS_POSITIVE = ("L", "B", "h", "V", "rho_C", "R", "T_end", "dt_max")

    def validate(self) -> list[str]:
        """Every problem found, as ``"field: message"`` strings."""
        errs = []
        for name in self.FIELDS_POSITIVE:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                errs.append(f"{name}: must be a positive number (got {v!r})")
        if self.kind not in meshmod.SHAPES:
            errs.append(f"kind: must be one of {sorted(meshmod.SHAPES)} (got {self.kind!r})")
        if not self.N >= 0:
            errs.append(f"N: must be nonnegative (got {self.N!r})")
        if not self.F >= 0:
            errs.append(f"F: must be nonnegative (got {self.F!r})")
        if not 0 < self.p < 1:
            errs.append(f"p: must lie in (0, 1) (got {self.p!r})")
        if not self.c >= 0:
            errs.append(f"c: must be nonnegative (got {self.c!r})")
        if not 0 <= self.theta_deg < 90:
            errs.append(f"theta_deg: must lie in [0, 90) (got {self.theta_deg!r})")
        if not 0 < self.alpha_deg < 90:
            errs.append(f"alpha_deg: must lie in (0, 90) (got {self.alpha_deg!r})")
        if not 0 < self.safety <= 1:
            errs.append(f"safety: must lie in (0, 1] (got {self.safety!r})")
        if self.buffer_depth is not None and not self.buffer_depth > 0:
            errs.append(f"buffer_depth: must be positive (got {self.buffer_depth!r})")
        if self.wall_mode not in ("scrape", "stop"):
            errs.append(f"wall_mode: must be 'scrape' or 'stop' (got {self.wall_mode!r})")
        if self.outlet not in ("open", "sealed"):
            errs.append(f"outlet: must be 'open' or 'sealed' (got {self.outlet!r})")
        if self.normalization not in ("mass", "probability"):
            errs.append(f"normalization: must be 'mass' or 'probability' (got {self.normalization!r})")
        if self.snapshot_every is not None and not self.snapshot_every > 0:
            errs.append(f"snapshot_every: must be positive (got {self.snapshot_every!r})")
        if not errs and self.h >= self.B:
            errs.append(f"h: must be smaller than the chord B (got {self.h!r})")
        if not errs and self.B / self.L > 0.5:
            log.warning("B/L = %.3g: the walkway is not elongated", self.B / self.L)
        return errs

    def replace(self, **kw) -> Scenario:
        return dataclasses.replace(self, **kw)

    # -- scaled quantities -------------------------------------------------

    @property
    def T_ref(self) -> float:
        return self.L / self.V

    @property
    def total_mass(self) -> float:
        """Internal total mass: N in the mass normalisation, 1 in the probability one."""
        if self.normalization == "mass":
            return float(self.N)
        return 1.0 if self.N > 0 else 0.0

    @property
    def mass_per_ped(self) -> float:
        return self.total_mass / self.N if self.N > 0 else 1.0

    @property
    def rho_capacity(self) -> float:
        """Capacity density in internal units (mass per scaled area)."""
        return self.rho_C * self.L**2 * self.mass_per_ped

    @property
    def depth(self) -> float:
        return (self.buffer_depth if self.buffer_depth is not None else 2.0 * self.R) / self.L

    def domain_spec(self) -> meshmod.DomainSpec:
        return meshmod.SHAPES[self.kind](chord_ref=self.B / self.L, buffer_depth=self.depth, length=self.L)

    def interaction(self) -> InteractionParams:
        return InteractionParams(c=self.c, R=self.R / self.L, alpha=math.radians(self.alpha_deg))


class Model:
    """Everything that does not change during a run."""

    def __init__(self, scn: Scenario, mesh: TriMesh | None = None):
        errs = scn.validate()
        if errs:
            raise ValueError("invalid scenario:\n  " + "\n  ".join(errs))
        self.scn = scn
        self.spec = scn.domain_spec()
        self.mesh = mesh if mesh is not None else meshmod.generate_mesh(self.spec, scn.h / scn.L)

    @cached_property
    def field(self) -> PotentialField:
        return solve_potential(self.mesh, math.radians(self.scn.theta_deg), self.spec)

    @cached_property
    def operator(self) -> InteractionOperator:
        return InteractionOperator(self.mesh, self.field.vd, self.scn.interaction())

    @cached_property
    def transporter(self) -> Transporter:
        return Transporter(self.mesh, self.scn.outlet, WallMode(self.scn.wall_mode))

    @cached_property
    def section(self) -> SectionSampler:
        return SectionSampler(self.mesh, self.scn.section_x)

    def velocity(self, rho: np.ndarray) -> np.ndarray:
        """Wall-corrected total velocity for density ``rho``."""
        return self.transporter.correct(self.field.vd + self.operator(rho))


@dataclass
class RunResult:
    scenario: Scenario
    t: np.ndarray
    S: np.ndarray
    I: np.ndarray
    M: np.ndarray  # internal mass units
    G: np.ndarray
    max_rho: np.ndarray  # max walkway density per record
    section: np.ndarray  # (records, n_section) densities
    rho: np.ndarray  # final density
    snapshots: list = field(default_factory=list)  # (t, rho, w)
    steps: int = 0
    metrics: RunMetrics | None = None

    def total(self) -> np.ndarray:
        return self.S + self.I + self.M + self.G


def run(scn: Scenario, model: Model | None = None, rho0: np.ndarray | None = None,
        entrance: bool = True, dt: float | None = None, max_steps: int | None = None) -> RunResult:
    """Simulate a scenario.

    ``rho0`` seeds the density (internal units, default empty). With
    ``entrance`` the reservoir starts with the whole crowd; otherwise the
    reservoir is empty and only ``rho0`` moves. A fixed ``dt`` (scaled)
    bypasses the stability-controlled step.
    """
    model = model if model is not None else Model(scn)
    m = model.mesh
    areas = m.areas
    dom = m.region == DOMAIN
    Ntot = scn.total_mass
    rho = np.zeros(m.n_elements) if rho0 is None else np.array(rho0, dtype=float)
    if rho.shape != (m.n_elements,) or np.any(rho < 0):
        raise ValueError("rho0 must be a nonnegative array with one value per element")

    ent = None
    if entrance and len(m.buffer_elements) and scn.F > 0 and Ntot > 0:
        ent = EntranceState.for_mesh(m, N=Ntot, F=scn.F * scn.T_ref * scn.mass_per_ped, p=scn.p,
                                     rho_capacity=scn.rho_capacity)
    T_end = scn.T_end / scn.T_ref
    dt_max = scn.dt_max / scn.T_ref
    sec = model.section.elements

    ts, Ss, Is, Ms, Gs, mx, secs, snaps = [], [], [], [], [], [], [], []
    G = 0.0

    def buffer_mass(r):
        return float(r[m.buffer_elements] @ areas[m.buffer_elements]) if len(m.buffer_elements) else 0.0

    def record(t, r):
        ts.append(t)
        Ss.append(ent.S if ent is not None else 0.0)
        Is.append(buffer_mass(r))
        Ms.append(float(r[dom] @ areas[dom]))
        Gs.append(G)
        mx.append(float(r[dom].max()) if dom.any() else 0.0)
        secs.append(r[sec].copy())

    next_snap = 0.0 if scn.snapshot_every else math.inf
    t, n = 0.0, 0
    record(t, rho)
    initial = Ntot if ent is not None else float(rho @ areas)
    # an empty system never changes
    idle = scn.stop_at_egress and initial == 0.0
    while t < T_end - 1e-12 and not idle:
        if max_steps is not None and n >= max_steps:
            break
        w = model.velocity(rho)
        if t >= next_snap - 1e-12:
            snaps.append((t, rho.copy(), w))
            next_snap += scn.snapshot_every
        step_dt = dt if dt is not None else model.transporter.stable_dt(w, scn.safety, dt_max)
        step_dt = min(step_dt, dt_max)
        prev = rho
        rho, out = model.transporter.step(rho, w, step_dt)
        G += out
        if ent is not None:
            ent, rho = entrance_step(ent, rho, m, step_dt)
        n += 1
        if not (np.all(np.isfinite(rho)) and math.isfinite(G)):
            raise NumericalAbort(f"non-finite density at t={t + step_dt:.6g} (step {n})", t, prev)
        t += step_dt
        record(t, rho)
        if scn.stop_at_egress and initial > 0 and G >= initial * (1.0 - EPS_MASS):
            break
    res = RunResult(scn, np.array(ts), np.array(Ss), np.array(Is), np.array(Ms), np.array(Gs),
                    np.array(mx), np.array(secs), rho, snaps, n)
    res.metrics = metrics(res, model)
    return res


def nonlinearity_gap(model: Model, rho0: np.ndarray, N: float, dt: float, steps: int) -> float:
    """L1 distance between ``evolve(rho0) / N`` and ``evolve(rho0 / N)``.

    Both evolutions use the same fixed ``dt`` and no entrance. The gap is
    round-off when the velocity ignores the density and finite otherwise.
    """
    tr = model.transporter
    a = np.array(rho0, dtype=float)
    b = a / N
    for _ in range(steps):
        a, _ = tr.step(a, model.velocity(a), dt)
        b, _ = tr.step(b, model.velocity(b), dt)
    return float(np.abs(a / N - b) @ model.mesh.areas)


def metrics(res: RunResult, model: Model) -> RunMetrics:
    scn = res.scenario
    Ntot = scn.total_mass
    norm = Ntot if Ntot > 0 else 1.0
    M, G = res.M / norm, res.G / norm
    Ta = egress_time(res.t, res.G, Ntot) if Ntot > 0 else 0.0
    win = plateau_window(res.t, M)
    # ped/m^2 per internal density unit
    to_ped = 1.0 / (scn.mass_per_ped * scn.L**2)
    if win is None:
        drho, max_p, prof_y, prof = 0.0, 0.0, None, None
        if Ntot > 0:
            log.warning("no full-walkway plateau detected; delta_rho left at 0")
    else:
        i0, i1 = win
        avg = res.section[i0 : i1 + 1].mean(axis=0)
        sec = model.section
        full = np.zeros(model.mesh.n_elements)
        full[sec.elements] = avg
        drho = (sec.rho_mid(full) - sec.rho_side(full)) / scn.rho_capacity
        max_p = float(res.max_rho[i0 : i1 + 1].max()) * to_ped
        prof_y = model.mesh.centroids[sec.elements, 1] * scn.L
        prof = avg * to_ped
    return RunMetrics(res.t, res.S / norm, res.I / norm, M, G, float(scn.N), scn.T_ref, Ta, drho, win,
                      max_p, prof_y, prof)
