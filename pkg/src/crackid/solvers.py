"""Nonlinear interface solvers on the broken mesh.

Three related problems share the same bulk stiffness and nodal interface
quadrature:

* ``solve_vi_pdas``      -- the contact variational inequality used to
  synthesise measurements, via a primal-dual active-set iteration;
* ``solve_penalty_state`` -- the penalty-regularised state equation, via a
  semismooth Newton step on the penetration set (the penalty term is
  piecewise linear, so each step is an exact solve);
* ``solve_adjoint``      -- the linear adjoint equation, whose matrix equals
  the final state Newton matrix.

Friction runs in both nonlinear solvers as a stick/slip set iteration:
sticking nodes have zero slip enforced by dof merging and release when
their trial traction exceeds the bound, while slipping nodes carry the
lagged traction F_b * sgn. The cohesion indicator is lagged. Nonlinear
interface terms are integrated with the nodal (trapezoid) rule, which
makes active sets nodewise and residuals exactly representable.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fem
from .errors import LineSearchFailed, NoConvergence
from .laws import beta_discrete, cohesion_discrete_prime, friction_discrete_prime

STATUS_CONTACT = "contact"
STATUS_COHESIVE = "cohesive"
STATUS_OPEN = "open"

SIGN_DEADBAND = 1e-14  # keep the previous lagged sign below this magnitude


@dataclass
class SolveReport:
    iterations: int
    residual: float
    active_sizes: list = field(default_factory=list)
    converged: bool = True
    damped_steps: int = 0


@dataclass
class ActiveSet:
    """Per-interface-node contact status and multiplier estimate."""

    statuses: np.ndarray   # array of STATUS_* strings
    lam: np.ndarray        # multiplier (stress), <= 0 at convergence
    active: np.ndarray     # bool, the converged contact-active mask

    @property
    def contact_count(self):
        return int(np.count_nonzero(self.active))


class _InterfaceOperator:
    """Shared assembly context for one (mesh, laws, elast, g) quadruple."""

    def __init__(self, mesh, laws, elast, g):
        self.mesh = mesh
        self.laws = laws
        self.elast = elast
        self.K = fem.assemble_stiffness(mesh, elast)
        self.F = fem.assemble_traction(mesh, g) if g is not None else np.zeros(mesh.n_dofs)
        self.w = mesh.interface_nodal_weights()
        self.interior = mesh.interface_interior()
        self.p1 = 2 * mesh.iface_plus
        self.p2 = 2 * mesh.iface_plus + 1
        self.m1 = 2 * mesh.iface_minus
        self.m2 = 2 * mesh.iface_minus + 1
        fixed = fem.dirichlet_dofs(mesh)
        mask = np.ones(mesh.n_dofs, dtype=bool)
        mask[fixed] = False
        self.free_mask = mask
        self.free = np.nonzero(mask)[0]
        self.Fnorm = np.linalg.norm(self.F[self.free])

    def jumps(self, values):
        return self.mesh.jump(values, 0), self.mesh.jump(values, 1)

    def lagged_load(self, sgn, ind):
        """Interface traction vector for frozen friction sign / cohesion
        indicator: t1 = F_b*sgn, t2 = (K_c/kappa)*ind on [[phi]]."""
        f = np.zeros(self.mesh.n_dofs)
        t1 = self.w * self.laws.F_b * sgn
        t2 = self.w * (self.laws.K_c / self.laws.kappa) * ind
        np.add.at(f, self.p1, t1)
        np.add.at(f, self.m1, -t1)
        np.add.at(f, self.p2, t2)
        np.add.at(f, self.m2, -t2)
        return f

    def merged_solve(self, matrix, f, slaves, masters):
        """Solve with the given jump dofs merged shut (slave -> master);
        returns the expanded solution (Dirichlet dofs zero)."""
        n = self.mesh.n_dofs
        rep = np.arange(n)
        rep[slaves] = masters
        keep = self.free_mask.copy()
        keep[slaves] = False
        kept = np.nonzero(keep)[0]
        col = np.full(n, -1)
        col[kept] = np.arange(kept.size)
        rows = self.free
        R = sp.coo_matrix((np.ones(rows.size), (rows, col[rep[rows]])),
                          shape=(n, kept.size)).tocsr()
        A = (R.T @ matrix @ R).tocsc()
        x = fem.FactorizedSPD(A).solve(R.T @ f)
        return R @ x

    def friction_update(self, r, j1, sgn, flips):
        """Stick/slip transfer. sgn = 0 marks sticking nodes (zero slip is
        enforced by merging); they release in the direction of the trial
        traction (recovered from the residual r) once it exceeds the bound
        F_b. Slipping nodes follow their actual slip sign; vanishing slip,
        or a second consecutive sign flip (a node whose equilibrium is
        sticking), sends them back to sticking."""
        new = sgn.copy()
        new_flips = flips.copy()
        stick = self.interior & (sgn == 0.0)
        idx = np.nonzero(stick)[0]
        if idx.size:
            t = (r[self.p1[idx]] - r[self.m1[idx]]) / (2.0 * self.w[idx])
            release = np.abs(t) > self.laws.F_b * (1.0 + 1e-12)
            new[idx[release]] = np.sign(t[release])
            new_flips[idx] = 0
        slip = self.interior & (sgn != 0.0)
        jdx = np.nonzero(slip)[0]
        if jdx.size:
            tiny = np.abs(j1[jdx]) < SIGN_DEADBAND
            flipped = ~tiny & (np.sign(j1[jdx]) != sgn[jdx])
            new[jdx] = np.where(tiny, 0.0, np.sign(j1[jdx]))
            new_flips[jdx] = np.where(flipped, flips[jdx] + 1, 0)
            cycling = new_flips[jdx] >= 2
            new[jdx[cycling]] = 0.0
            new_flips[jdx[cycling]] = 0
        return new, new_flips

    def residual(self, values, eps=None):
        """True nonlinear residual K u + f_int(u) - F (full-length)."""
        j1, j2 = self.jumps(values)
        t1 = self.w * friction_discrete_prime(j1, self.laws)
        t2 = self.w * cohesion_discrete_prime(j2, self.laws)
        if eps is not None:
            t2 = t2 + self.w * beta_discrete(j2, eps)
        r = self.K @ values - self.F
        np.add.at(r, self.p1, t1)
        np.add.at(r, self.m1, -t1)
        np.add.at(r, self.p2, t2)
        np.add.at(r, self.m2, -t2)
        return r

    def rel_residual(self, values, eps=None, stick=None):
        """Euclidean dual-norm residual, relative to the load norm.

        Sticking nodes (zero slip enforced) carry an admissible tangential
        reaction |t| <= F_b that the pointwise sgn law cannot express;
        their tangential rows count only the excess above the bound.
        """
        r = self.residual(values, eps)
        if stick is not None:
            idx = np.nonzero(stick)[0]
            if idx.size:
                t = (r[self.p1[idx]] - r[self.m1[idx]]) / (2.0 * self.w[idx])
                excess = self.w[idx] * np.maximum(0.0, np.abs(t) - self.laws.F_b)
                r[self.p1[idx]] = excess
                r[self.m1[idx]] = -excess
        scale = self.Fnorm if self.Fnorm > 0.0 else 1.0
        return float(np.linalg.norm(r[self.free]) / scale)

    def cohesion_update(self, j2, ind):
        at_edge = np.abs(np.abs(j2) - self.laws.kappa) < SIGN_DEADBAND
        return np.where(at_edge, ind, (np.abs(j2) < self.laws.kappa).astype(float))


def _statuses(jump2, active, kappa):
    out = np.where(jump2 < kappa, STATUS_COHESIVE, STATUS_OPEN)
    out[active] = STATUS_CONTACT
    return out


# ----------------------------------------------------------------------
# PDAS for the variational inequality
# ----------------------------------------------------------------------

def solve_vi_pdas(mesh, laws, elast, g, max_outer=50, c=None, tol=1e-10):
    """Solve the discrete contact VI by a primal-dual active-set iteration.

    Contact-active nodes ([[u]]_2 = 0) and friction-stick nodes
    ([[u]]_1 = 0) are enforced by dof merging. The contact set is
    re-guessed from lambda + c*[[u]]_2 < 0 with c = mu_L/h by default;
    stick nodes release when their trial traction exceeds the friction
    bound, slipping nodes whose slip vanishes or flips sign stick again,
    and the cohesion indicator is lagged. Convergence means contact set,
    stick/slip signs and indicator all repeat. Period-2 cycling of the
    contact set is broken once by keeping the union of the two sets.
    """
    op = _InterfaceOperator(mesh, laws, elast, g)
    if c is None:
        c = elast.mu_L / mesh.h
    n_if = mesh.iface_minus.size
    interior = op.interior

    active = interior.copy()            # start from the fully closed guess
    sgn = np.zeros(n_if)                # 0 = sticking
    flips = np.zeros(n_if, dtype=np.int64)
    ind = np.ones(n_if)
    lam = np.zeros(n_if)
    jump2 = np.zeros(n_if)
    values = np.zeros(mesh.n_dofs)
    history = []
    prev_active_bytes = None
    union_used = False

    for it in range(1, max_outer + 1):
        f = op.F - op.lagged_load(sgn, ind)
        stick = interior & (sgn == 0.0)
        slaves = np.concatenate([op.m2[active], op.m1[stick]])
        masters = np.concatenate([op.p2[active], op.p1[stick]])
        values = op.merged_solve(op.K, f, slaves, masters)
        r = f - op.K @ values
        jump1, jump2 = op.jumps(values)
        lam = np.zeros(n_if)
        lam[interior] = (r[op.p2[interior]] - r[op.m2[interior]]) / (2.0 * op.w[interior])

        new_active = interior & (lam + c * jump2 < 0.0)
        new_sgn, flips = op.friction_update(r, jump1, sgn, flips)
        new_ind = op.cohesion_update(jump2, ind)
        history.append(int(np.count_nonzero(new_active)))

        if (np.array_equal(new_active, active) and np.array_equal(new_sgn, sgn)
                and np.array_equal(new_ind, ind)):
            break
        if (not union_used and prev_active_bytes is not None
                and new_active.tobytes() == prev_active_bytes
                and not np.array_equal(new_active, active)):
            # period-2 oscillation: keep the larger (union) active set once
            new_active = new_active | active
            union_used = True
        prev_active_bytes = active.tobytes()
        active, sgn, ind = new_active, new_sgn, new_ind
    else:
        raise NoConvergence("PDAS did not stabilise in %d iterations" % max_outer)

    rel = _stationarity_residual(op, values, sgn, ind, active)
    z = fem.DofField(mesh, values)
    lam = np.where(active, lam, 0.0)  # inactive nodes carry no multiplier
    aset = ActiveSet(statuses=_statuses(jump2, active, laws.kappa),
                     lam=lam, active=active)
    report = SolveReport(iterations=it, residual=rel, active_sizes=history)
    return z, aset, report


def _stationarity_residual(op, values, sgn, ind, active):
    """Relative stationarity residual on free dofs, excluding the rows that
    carry constraint reactions (contact-pair x2 dofs; stick-pair x1 dofs
    count only the traction excess above the friction bound)."""
    r = op.K @ values + op.lagged_load(sgn, ind) - op.F
    stick = op.interior & (sgn == 0.0)
    idx = np.nonzero(stick)[0]
    if idx.size:
        t = (r[op.p1[idx]] - r[op.m1[idx]]) / (-2.0 * op.w[idx])
        excess = op.w[idx] * np.maximum(0.0, np.abs(t) - op.laws.F_b)
        r[op.p1[idx]] = excess
        r[op.m1[idx]] = -excess
    mask = op.free_mask.copy()
    mask[op.p2[active]] = False
    mask[op.m2[active]] = False
    scale = op.Fnorm if op.Fnorm > 0 else 1.0
    return float(np.linalg.norm(r[mask]) / scale)


# ----------------------------------------------------------------------
# Penalty state and adjoint
# ----------------------------------------------------------------------

def solve_penalty_state(mesh, laws, elast, g, eps, max_outer=50, tol=1e-10,
                        return_operator=False):
    """Solve the penalty-regularised state equation.

    Semismooth Newton on the penalty term: the penetration set
    {[[u]]_2 < 0} contributes a 1/eps nodal jump mass, and since the
    discrete penalty is piecewise linear each Newton step solves the
    current linearisation exactly. Friction and cohesion are lagged as in
    PDAS. A halving damped step (floor 2^-20) guards against residual
    growth; termination requires the penetration set and lagged fields to
    repeat and the true residual to pass ``tol`` (relative).
    """
    op = _InterfaceOperator(mesh, laws, elast, g)
    n_if = mesh.iface_minus.size
    interior = op.interior

    values = np.zeros(mesh.n_dofs)
    pset = np.zeros(n_if, dtype=bool)
    sgn = np.zeros(n_if)                # 0 = sticking
    flips = np.zeros(n_if, dtype=np.int64)
    ind = np.ones(n_if)
    res = np.inf
    history = []
    damped = 0
    factor = None
    prev_config = None

    for it in range(1, max_outer + 1):
        nodes = np.nonzero(pset)[0]
        Mp = fem.interface_nodal_jump_matrix(mesh, op.w / eps, comp=1, nodes=nodes)
        A = op.K + Mp
        f = op.F - op.lagged_load(sgn, ind)
        stick = interior & (sgn == 0.0)
        if np.any(stick):
            factor = None
            new_values = op.merged_solve(A, f, op.m1[stick], op.p1[stick])
        else:
            system = fem.reduce_system(A, f, mesh)
            factor = fem.FactorizedSPD(system.matrix)
            new_values = system.expand(factor.solve(system.rhs))
        new_res = op.rel_residual(new_values, eps, stick=stick)

        config = (pset.tobytes(), sgn.tobytes(), ind.tobytes())
        if config == prev_config and new_res >= res and res > tol:
            # repeating configuration without progress: damped fallback
            t, ok = 0.5, False
            while t >= 2.0**-20:
                trial = values + t * (new_values - values)
                trial_res = op.rel_residual(trial, eps, stick=stick)
                if trial_res < res:
                    new_values, new_res = trial, trial_res
                    ok, damped = True, damped + 1
                    break
                t *= 0.5
            if not ok:
                raise LineSearchFailed(
                    "damped penalty step stalled at residual %.3e" % res)
        values, res = new_values, new_res
        prev_config = config

        r = f - A @ values
        jump1, jump2 = op.jumps(values)
        new_pset = interior & (jump2 < 0.0)
        new_sgn, flips = op.friction_update(r, jump1, sgn, flips)
        new_ind = op.cohesion_update(jump2, ind)
        history.append(int(np.count_nonzero(new_pset)))
        stable = (np.array_equal(new_pset, pset)
                  and np.array_equal(new_sgn, sgn)
                  and np.array_equal(new_ind, ind))
        pset, sgn, ind = new_pset, new_sgn, new_ind
        if stable and res <= tol:
            break
    else:
        raise NoConvergence(
            "penalty solver did not stabilise in %d iterations (residual %.3e)"
            % (max_outer, res))

    u = fem.DofField(mesh, values)
    report = SolveReport(iterations=it, residual=res, active_sizes=history,
                         damped_steps=damped)
    if return_operator:
        return u, report, op, factor
    return u, report


def penalty_newton_matrix(mesh, u_eps, eps):
    """Stiffness contribution of the collapsed adjoint/Newton penalty term:
    nodal jump mass weighted 1/eps on the penetration set of ``u_eps``."""
    jump2 = mesh.jump(u_eps.values, 1)
    nodes = np.nonzero(mesh.interface_interior() & (jump2 < 0.0))[0]
    w = mesh.interface_nodal_weights()
    return fem.interface_nodal_jump_matrix(mesh, w / eps, comp=1, nodes=nodes)


def solve_adjoint(mesh, laws, elast, u_eps, z_obs, eps, stiffness=None,
                  factor=None):
    """Solve the linear adjoint equation for the misfit against ``z_obs``.

    The system matrix is the bulk stiffness plus the collapsed penalty
    linearisation (beta' of the state jump, exact for the discrete law);
    with the discrete laws the friction/cohesion second derivatives vanish
    so no tangential coupling remains. ``z_obs`` is a full-length dof
    vector holding the measurement trace on the observation nodes. A
    prefactored state Newton matrix may be passed to skip factorisation.
    """
    K = stiffness if stiffness is not None else fem.assemble_stiffness(mesh, elast)
    A = K + penalty_newton_matrix(mesh, u_eps, eps)
    Mobs = fem.assemble_boundary_mass(mesh)
    rhs = Mobs @ (u_eps.values - np.asarray(z_obs).reshape(-1))
    system = fem.reduce_system(A, rhs, mesh)
    if factor is None:
        factor = fem.FactorizedSPD(system.matrix)
    v = fem.solve_spd(system, factor=factor)
    res = np.linalg.norm(system.matrix @ v.values[system.free] - system.rhs)
    nrm = np.linalg.norm(system.rhs)
    report = SolveReport(iterations=1, residual=float(res / nrm) if nrm > 0 else 0.0)
    return v, report


def recover_multiplier(u_eps, eps):
    """Contact multiplier estimate beta_eps([[u]]_2) per interface node."""
    jump2 = u_eps.mesh.jump(u_eps.values, 1)
    return beta_discrete(jump2, eps)
