"""End-to-end experiment driver: measurement synthesis on the fine mesh,
identification loop on the offset mesh, objective and shape-error tracking.

The measurement side solves the contact variational inequality for the true
breaking line and stores the observation-boundary trace; identification
starts from the flat line psi = 0.25 and walks the penalty/adjoint/descent
loop for a fixed number of iterations, logging objective and shape-error
ratios. The two meshes use different column counts (h_identify defaults to
h_measure * 8/7) so synthetic data is never inverted on its own grid.
"""

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fem, shape, solvers
from .errors import ConfigError, CrackidError
from .geometry import InterfaceGraph, build_mesh, uniform_graph
from .laws import CohesiveParams

MEASUREMENT_HEADER = "# measurement v1"

TRUE_INTERFACES = {
    # piecewise-linear kinked line min(0.3, x/3 + 0.1), represented exactly
    "kinked": InterfaceGraph(np.array([0.0, 0.6, 1.0]), np.array([0.1, 0.3, 0.3])),
    "flat": InterfaceGraph(np.array([0.0, 1.0]), np.array([0.25, 0.25])),
}

LOAD_SLOPES = {"contact": 7.0 / 4.0, "stretch": 5.0 / 4.0}


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one identification experiment."""

    true_interface: str = "kinked"
    load_case: str = "contact"
    E_Y: float = 73000.0
    nu_P: float = 0.34
    F_b: float = 1.0e-5
    delta: float = 1.0e-3
    K_c: float = 1.0e-3
    kappa: float = 1.0e-2
    m: float = 1.0
    eps: float = 1.0e-8
    rho_reg: Optional[float] = None      # None -> 1/mu_L
    h_measure: float = 1.0e-2
    h_identify: Optional[float] = None   # None -> h_measure * 8/7
    H: float = 0.1
    psi0: float = 0.25
    n_max: int = 200
    max_outer: int = 50
    solver_tol: float = 1.0e-10
    curvature: str = "coarse"            # or "zero"
    single_endpoint_factor: bool = False
    endpoint_cap: bool = True
    early_stop: bool = False
    snapshot_every: int = 10

    def __post_init__(self):
        if self.true_interface not in TRUE_INTERFACES:
            raise ConfigError("unknown true interface %r" % self.true_interface)
        if self.load_case not in LOAD_SLOPES:
            raise ConfigError("unknown load case %r" % self.load_case)
        if self.n_max < 0:
            raise ConfigError("n_max must be >= 0")
        if self.resolved_h_identify() == self.h_measure:
            raise ConfigError(
                "h_identify must differ from h_measure (inverse-crime guard)")
        if self.curvature not in ("coarse", "zero"):
            raise ConfigError("curvature must be 'coarse' or 'zero'")

    def resolved_h_identify(self):
        return self.h_identify if self.h_identify is not None \
            else self.h_measure * (1.0 + 1.0 / 7.0)

    def elasticity(self):
        return fem.IsotropicElasticity.from_young(self.E_Y, self.nu_P,
                                                  rho_reg=self.rho_reg)

    def cohesive(self):
        return CohesiveParams(F_b=self.F_b, delta=self.delta, K_c=self.K_c,
                              kappa=self.kappa, m=self.m)

    def traction(self, load_case=None):
        """g = (0, (1 - a x1)(4 x2 - 1) mu_L) with a = 7/4 or 5/4."""
        a = LOAD_SLOPES[load_case or self.load_case]
        mu = self.elasticity().mu_L

        def g(x, y):
            return np.zeros_like(np.asarray(x, dtype=float)), \
                (1.0 - a * np.asarray(x, dtype=float)) * (4.0 * np.asarray(y, dtype=float) - 1.0) * mu

        return g

    def true_graph(self):
        return TRUE_INTERFACES[self.true_interface]

    def coarse_count(self):
        return int(round(1.0 / self.H)) + 1

    def initial_graph(self):
        return uniform_graph(np.full(self.coarse_count(), self.psi0), self.H)


# ----------------------------------------------------------------------
# Measurements
# ----------------------------------------------------------------------

@dataclass
class Measurement:
    """Observation-boundary displacement trace of the true solution."""

    h: float
    load_case: str
    points: np.ndarray   # (n, 2) sample coordinates on the obs boundary
    disp: np.ndarray     # (n, 2) displacements


def observation_nodes(mesh):
    """Observation vertex ids sorted by (boundary group, x1)."""
    ids = np.unique(mesh.observation_edges)
    pts = mesh.vertices[ids]
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return ids[order]


def synthesize_measurement(config):
    """Solve the VI on the fine mesh of the true line and trace it.

    Returns (measurement, z field, active set, report, mesh).
    """
    mesh = build_mesh(config.true_graph(), config.h_measure)
    z, aset, report = solvers.solve_vi_pdas(
        mesh, config.cohesive(), config.elasticity(), config.traction(),
        max_outer=config.max_outer)
    ids = observation_nodes(mesh)
    meas = Measurement(h=config.h_measure, load_case=config.load_case,
                       points=mesh.vertices[ids].copy(),
                       disp=z.as_points()[ids].copy())
    return meas, z, aset, report, mesh


def write_measurement(path_or_fh, meas):
    fh = path_or_fh if hasattr(path_or_fh, "write") else open(path_or_fh, "w")
    try:
        fh.write(MEASUREMENT_HEADER + "\n")
        fh.write("# h = %.17g\n" % meas.h)
        fh.write("# load_case = %s\n" % meas.load_case)
        for (x, y), (u1, u2) in zip(meas.points, meas.disp):
            fh.write("%.17g %.17g %.17g %.17g\n" % (x, y, u1, u2))
    finally:
        if fh is not path_or_fh:
            fh.close()


def read_measurement(path_or_fh):
    fh = path_or_fh if hasattr(path_or_fh, "read") else open(path_or_fh)
    try:
        header = fh.readline().strip()
        if header != MEASUREMENT_HEADER:
            raise ValueError("not a measurement v1 file: %r" % header)
        h = float(fh.readline().split("=")[1])
        load_case = fh.readline().split("=")[1].strip()
        data = np.loadtxt(fh, ndmin=2)
    finally:
        if fh is not path_or_fh:
            fh.close()
    return Measurement(h=h, load_case=load_case,
                       points=data[:, 0:2], disp=data[:, 2:4])


def measurement_to_text(meas):
    buf = io.StringIO()
    write_measurement(buf, meas)
    return buf.getvalue()


def interp_measurement(mesh, meas):
    """Arclength-linear interpolation of the measurement onto the current
    observation nodes; returns a full-length dof vector (zero elsewhere)."""
    z = np.zeros(mesh.n_dofs)
    ids = observation_nodes(mesh)
    pts = mesh.vertices[ids]
    for y_group in np.unique(meas.points[:, 1]):
        src = np.abs(meas.points[:, 1] - y_group) < 1e-12
        dst = ids[np.abs(pts[:, 1] - y_group) < 1e-12]
        if dst.size == 0:
            continue
        xs = meas.points[src, 0]
        order = np.argsort(xs)
        xd = mesh.vertices[dst, 0]
        for comp in (0, 1):
            z[2 * dst + comp] = np.interp(xd, xs[order],
                                          meas.disp[src, comp][order])
    return z


# ----------------------------------------------------------------------
# Objective and shape error
# ----------------------------------------------------------------------

def objective(mesh, u_eps, z_interp, rho_reg, psi):
    """Least-squares boundary misfit plus perimeter regularisation."""
    misfit = fem.boundary_misfit(mesh, u_eps.values, z_interp)
    return misfit + rho_reg * psi.length()


def shape_error(psi_a, psi_b, grid_step=1e-3):
    """Sup-norm proxy: max |psi_a - psi_b| over a uniform sample grid."""
    x = np.arange(0.0, 1.0 + 0.5 * grid_step, grid_step)
    return float(np.max(np.abs(psi_a(x) - psi_b(x))))


# ----------------------------------------------------------------------
# Identification loop
# ----------------------------------------------------------------------

@dataclass
class IterationLog:
    rows: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    gradients: list = field(default_factory=list)   # (n, s, d3, lam2) tuples
    aborted: Optional[str] = None

    CSV_COLUMNS = ("n", "J", "J_ratio", "shape_error_ratio",
                   "pdas_na", "penalty_iters", "clamped")

    def add(self, **row):
        self.rows.append(row)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def min_ratio(self, name):
        return float(np.min(self.column(name)))

    def to_csv(self):
        lines = [",".join(self.CSV_COLUMNS)]
        for r in self.rows:
            lines.append("%d,%.17g,%.17g,%.17g,%d,%d,%d" % (
                r["n"], r["J"], r["J_ratio"], r["shape_error_ratio"],
                r["pdas_na"], r["penalty_iters"], r["clamped"]))
        return "\n".join(lines) + "\n"


def identify(config, meas, record_gradients=False):
    """Run the breaking-line identification loop.

    Starts from the flat coarse graph, and per iteration: meshes the
    current line, solves the penalty state and adjoint, forms the boundary
    gradient and scaled descent velocity, and updates the grid function.
    The measurement's load case governs the forward solves. Stops after
    ``n_max`` updates (fixed-budget stopping rule); solver failures abort
    early with the partial log preserved in ``log.aborted``.
    """
    laws = config.cohesive()
    elast = config.elasticity()
    g = config.traction(meas.load_case)
    h = config.resolved_h_identify()
    psi_true = config.true_graph()
    psi = config.initial_graph()
    log = IterationLog()

    J0 = None
    err0 = shape_error(psi, psi_true)
    clamped = 0

    for n in range(config.n_max + 1):
        try:
            mesh = build_mesh(psi, h)
            u, rep, op, factor = solvers.solve_penalty_state(
                mesh, laws, elast, g, config.eps, max_outer=config.max_outer,
                tol=config.solver_tol, return_operator=True)
        except CrackidError as exc:
            log.aborted = "iteration %d: %s" % (n, exc)
            break

        z_vec = interp_measurement(mesh, meas)
        J = objective(mesh, u, z_vec, elast.rho_reg, psi)
        if J0 is None:
            J0 = J
        err = shape_error(psi, psi_true)
        pen_count = int(np.count_nonzero(
            mesh.interface_interior() & (mesh.jump(u.values, 1) < 0.0)))
        log.add(n=n, J=J, J_ratio=J / J0,
                shape_error=err,
                shape_error_ratio=err / err0 if err0 > 0 else 1.0,
                pdas_na=pen_count, penalty_iters=rep.iterations,
                clamped=clamped)
        if n % config.snapshot_every == 0 or n == config.n_max:
            log.snapshots[n] = psi

        if n == config.n_max:
            break

        try:
            v, _ = solvers.solve_adjoint(mesh, laws, elast, u, z_vec,
                                         config.eps, stiffness=op.K,
                                         factor=factor)
            grad = shape.boundary_gradient(mesh, psi, u, v, laws, elast,
                                           config.eps,
                                           curvature=config.curvature)
            vel = shape.descent_velocity(
                grad, h, single_endpoint_factor=config.single_endpoint_factor,
                endpoint_cap=config.endpoint_cap)
        except CrackidError as exc:
            log.aborted = "iteration %d: %s" % (n, exc)
            break

        if record_gradients:
            log.gradients.append((n, grad.s.copy(), grad.d3.copy(),
                                  vel.lam2.copy()))
        if vel.zero_gradient:
            break
        if config.early_stop and np.max(np.abs(vel.lam2)) < 1e-12 * h:
            break
        psi, clamped = shape.update_interface(psi, vel)

    return log
