"""Macroscopic crowd flow on walkways: a nonlocal conservation law solved by a
push-forward finite-volume scheme on triangular meshes."""

from .config import ConfigError, load_config
from .entrance import EntranceState, arrival_rate, entrance_step, sigma
from .field import PotentialField, angle_diagnostics, rect_desired_velocity, solve_potential
from .geometry import Polygon2, Sector, convex_intersection, polygon_area, sector_contains, translate
from .interaction import InteractionOperator, InteractionParams, interaction_velocity, total_velocity
from .mesh import DomainSpec, TriMesh, generate_mesh, load_mesh, radius_query, save_mesh
from .observables import RunMetrics, delta_rho, egress_time, expected_count, to_mass_density, to_probability_density
from .simulation import Model, NumericalAbort, RunResult, Scenario, run
from .transport import CFLError, DensityField, Transporter, WallMode, stable_dt, wall_correct

__version__ = "0.1.0"
