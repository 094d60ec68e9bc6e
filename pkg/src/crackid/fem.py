"""P1 finite-element core: plane-strain elasticity assembly on the broken
mesh, boundary/interface integrals, Dirichlet elimination and sparse solves.

Dof numbering is 2*vertex + component. Assembly is vectorised over elements
and produces deterministic matrices (fixed summation order in the sparse
conversion). Dirichlet conditions are handled by row/column elimination so
reduced systems stay symmetric positive definite.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateElement, InvalidPoisson, MaxIterations, NotPositiveDefinite

GAUSS2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))  # on [0, 1]


def lame_from_young(E_Y, nu_P):
    """Lame parameters mu = E/(2(1+nu)), lambda = 2 mu nu/(1-2 nu)."""
    if not 0.0 <= nu_P < 0.5:
        raise InvalidPoisson("Poisson ratio must lie in [0, 0.5), got %r" % nu_P)
    mu = E_Y / (2.0 * (1.0 + nu_P))
    lam = 2.0 * mu * nu_P / (1.0 - 2.0 * nu_P)
    return mu, lam


@dataclass(frozen=True)
class IsotropicElasticity:
    """Isotropic plane-strain material with perimeter weight rho_reg."""

    E_Y: float
    nu_P: float
    mu_L: float
    lambda_L: float
    rho_reg: float

    @classmethod
    def from_young(cls, E_Y, nu_P, rho_reg=None):
        mu, lam = lame_from_young(E_Y, nu_P)
        if rho_reg is None:
            rho_reg = 1.0 / mu
        return cls(E_Y=float(E_Y), nu_P=float(nu_P), mu_L=mu, lambda_L=lam,
                   rho_reg=float(rho_reg))

    def dmatrix(self):
        """Constitutive matrix for (e11, e22, 2 e12) Voigt strain."""
        mu, lam = self.mu_L, self.lambda_L
        return np.array([
            [lam + 2.0 * mu, lam, 0.0],
            [lam, lam + 2.0 * mu, 0.0],
            [0.0, 0.0, mu],
        ])

    def stress(self, eps):
        """Cauchy stress of a 2x2 strain tensor (or (n,2,2) batch)."""
        eps = np.asarray(eps)
        tr = eps[..., 0, 0] + eps[..., 1, 1]
        sig = 2.0 * self.mu_L * eps
        sig[..., 0, 0] += self.lambda_L * tr
        sig[..., 1, 1] += self.lambda_L * tr
        return sig


@dataclass
class DofField:
    """Nodal 2-vector field on a broken mesh, stored flat (2 per vertex)."""

    mesh: object
    values: np.ndarray

    def component(self, c):
        return self.values[c::2]

    def as_points(self):
        return self.values.reshape(-1, 2)


@dataclass
class SparseSymSystem:
    """Dirichlet-reduced symmetric system plus the bookkeeping to expand
    reduced solutions back to the full dof vector."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray              # free dof indices into the full vector
    n_dofs: int
    mesh: object = None
    fixed_values: np.ndarray = None  # full-length, nonzero only on fixed dofs

    def expand(self, x_free):
        full = np.zeros(self.n_dofs) if self.fixed_values is None \
            else self.fixed_values.copy()
        full[self.free] = x_free
        return full


# ----------------------------------------------------------------------
# Element quantities
# ----------------------------------------------------------------------

def triangle_geometry(vertices, triangles):
    """Areas and P1 shape gradients. grads[e, i] = grad of hat i on tri e."""
    p = vertices[triangles]
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    area = 0.5 * (v1[:, 0] * v2[:, 1] - v2[:, 0] * v1[:, 1])
    if np.any(area <= 0.0):
        raise DegenerateElement("nonpositive triangle area in assembly")
    grads = np.empty((triangles.shape[0], 3, 2))
    # grad lambda_i = rot90(opposite edge) / (2 A)
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    for i, e in enumerate((e0, e1, e2)):
        grads[:, i, 0] = -e[:, 1]
        grads[:, i, 1] = e[:, 0]
    grads /= (2.0 * area)[:, None, None]
    return area, grads


def element_stiffness(vertices, triangles, dmat):
    """Per-element 6x6 plane-strain stiffness blocks (vectorised)."""
    area, grads = triangle_geometry(vertices, triangles)
    nt = triangles.shape[0]
    B = np.zeros((nt, 3, 6))
    B[:, 0, 0::2] = grads[:, :, 0]
    B[:, 1, 1::2] = grads[:, :, 1]
    B[:, 2, 0::2] = grads[:, :, 1]
    B[:, 2, 1::2] = grads[:, :, 0]
    ke = np.einsum("eji,jk,ekl->eil", B, dmat, B) * area[:, None, None]
    return ke, area, grads


def _scatter(ke_blocks, dof_table, n_dofs):
    nt, nd, _ = ke_blocks.shape
    rows = np.repeat(dof_table, nd, axis=1).reshape(-1)
    cols = np.tile(dof_table, (1, nd)).reshape(-1)
    mat = sp.coo_matrix((ke_blocks.reshape(-1), (rows, cols)),
                        shape=(n_dofs, n_dofs))
    return mat.tocsr()


def _dof_table(triangles):
    t = triangles
    return np.column_stack([2 * t[:, 0], 2 * t[:, 0] + 1,
                            2 * t[:, 1], 2 * t[:, 1] + 1,
                            2 * t[:, 2], 2 * t[:, 2] + 1])


def assemble_stiffness(mesh, elast, triangles=None):
    """Bulk stiffness over the broken domain (full, pre-elimination).

    ``triangles`` restricts assembly to a subset of elements; by default
    all elements of both subdomains are used.
    """
    tris = mesh.triangles if triangles is None else np.asarray(triangles)
    ke, _, _ = element_stiffness(mesh.vertices, tris, elast.dmatrix())
    return _scatter(ke, _dof_table(tris), mesh.n_dofs)


def assemble_traction(mesh, g):
    """Boundary load vector of the traction ``g(x, y) -> (gx, gy)`` over the
    Neumann edges, via 2-point Gauss quadrature per edge."""
    f = np.zeros(mesh.n_dofs)
    edges = mesh.neumann_edges
    if edges.size == 0:
        return f
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    L = np.hypot(*(b - a).T)
    for t in GAUSS2:
        pts = a + t * (b - a)
        gx, gy = g(pts[:, 0], pts[:, 1])
        w = 0.5 * L
        for comp, gv in ((0, np.asarray(gx, dtype=float)),
                         (1, np.asarray(gy, dtype=float))):
            gv = np.broadcast_to(gv, L.shape)
            np.add.at(f, 2 * edges[:, 0] + comp, w * gv * (1.0 - t))
            np.add.at(f, 2 * edges[:, 1] + comp, w * gv * t)
    return f


def assemble_interface_linear(mesh, weights, component="normal", lumped=False):
    """Jump-mass matrix over the interface pairs.

    For matched P1 traces the quadratic form is
      sum_pairs w_e * int_e [[u]]_c [[v]]_c dS,
    with the 1D edge mass matrix (consistent by default, trapezoid-lumped
    when ``lumped``). ``component`` selects the jump component: "normal"
    couples the x2 dofs, "tangent" the x1 dofs.
    """
    comp = {"normal": 1, "tangent": 0}[component]
    w = np.broadcast_to(np.asarray(weights, dtype=float), mesh.pair_lengths.shape)
    L = mesh.pair_lengths
    if lumped:
        m11 = m22 = 0.5 * L * w
        m12 = np.zeros_like(L)
    else:
        m11 = m22 = L * w / 3.0
        m12 = L * w / 6.0
    pa = 2 * mesh.pair_plus[:, 0] + comp
    pb = 2 * mesh.pair_plus[:, 1] + comp
    ma = 2 * mesh.pair_minus[:, 0] + comp
    mb = 2 * mesh.pair_minus[:, 1] + comp
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    # signed pattern (+plus, -minus) x (+plus, -minus)
    add(pa, pa, m11); add(pb, pb, m22); add(pa, pb, m12); add(pb, pa, m12)
    add(ma, ma, m11); add(mb, mb, m22); add(ma, mb, m12); add(mb, ma, m12)
    add(pa, ma, -m11); add(pb, mb, -m22); add(pa, mb, -m12); add(pb, ma, -m12)
    add(ma, pa, -m11); add(mb, pb, -m22); add(ma, pb, -m12); add(mb, pa, -m12)
    mat = sp.coo_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(mesh.n_dofs, mesh.n_dofs))
    return mat.tocsr()


def interface_nodal_jump_matrix(mesh, node_weights, comp=1, nodes=None):
    """Nodal (lumped) jump quadratic form sum_n w_n [[u]]_c(n) [[v]]_c(n).

    ``nodes`` restricts to a subset of interface node indices (e.g. the
    penetration set); weights are per interface node.
    """
    idx = np.arange(mesh.iface_minus.size) if nodes is None else np.asarray(nodes)
    if idx.size == 0:
        return sp.csr_matrix((mesh.n_dofs, mesh.n_dofs))
    w = np.asarray(node_weights, dtype=float)[idx]
    p = 2 * mesh.iface_plus[idx] + comp
    m = 2 * mesh.iface_minus[idx] + comp
    rows = np.concatenate([p, m, p, m])
    cols = np.concatenate([p, m, m, p])
    vals = np.concatenate([w, w, -w, -w])
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()


def assemble_boundary_mass(mesh, edges=None):
    """Consistent boundary mass over ``edges`` (default: observation edges),
    acting identically on both displacement components."""
    if edges is None:
        edges = mesh.observation_edges
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    L = np.hypot(*(b - a).T)
    rows, cols, vals = [], [], []
    for comp in (0, 1):
        da = 2 * edges[:, 0] + comp
        db = 2 * edges[:, 1] + comp
        rows += [da, db, da, db]
        cols += [da, db, db, da]
        vals += [L / 3.0, L / 3.0, L / 6.0, L / 6.0]
    mat = sp.coo_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(mesh.n_dofs, mesh.n_dofs))
    return mat.tocsr()


# ----------------------------------------------------------------------
# Dirichlet elimination and solving
# ----------------------------------------------------------------------

def dirichlet_dofs(mesh):
    v = mesh.dirichlet_vertices
    return np.sort(np.concatenate([2 * v, 2 * v + 1]))


def reduce_system(matrix, rhs, mesh, dirichlet_values=None):
    """Eliminate Dirichlet dofs by row/column removal.

    ``dirichlet_values`` (full-length vector) prescribes inhomogeneous
    boundary values; the reduced right-hand side gets the usual lift.
    """
    fixed = dirichlet_dofs(mesh)
    mask = np.ones(mesh.n_dofs, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    rhs = np.asarray(rhs, dtype=float)
    fixed_full = None
    if dirichlet_values is not None:
        fixed_full = np.zeros(mesh.n_dofs)
        fixed_full[fixed] = np.asarray(dirichlet_values).reshape(-1)[fixed]
        rhs = rhs - matrix @ fixed_full
    mat = matrix.tocsr()[free][:, free]
    return SparseSymSystem(matrix=mat, rhs=rhs[free], free=free,
                           n_dofs=mesh.n_dofs, mesh=mesh,
                           fixed_values=fixed_full)


class FactorizedSPD:
    """Cached sparse LU of an SPD matrix (deterministic ordering)."""

    def __init__(self, matrix):
        try:
            self.lu = spla.splu(matrix.tocsc())
        except RuntimeError as exc:  # exactly singular
            raise NotPositiveDefinite(str(exc)) from exc
        du = np.abs(self.lu.U.diagonal())
        if du.size and du.min() <= 1e-12 * du.max():
            raise NotPositiveDefinite("matrix numerically rank deficient")
        self.matrix = matrix

    def solve(self, rhs):
        x = self.lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise NotPositiveDefinite("factorised solve produced non-finite values")
        return x


def solve_spd(system, factor=None, rtol=1e-10):
    """Solve the reduced SPD system; returns a full-length DofField.

    Direct sparse factorisation, checked at ``rtol`` in the backward-error
    sense (residual relative to |b| + |A| |x|, which reduces to |b| for
    well-scaled systems); falls back to diagonally preconditioned CG,
    raising MaxIterations if that also stalls. Deterministic across runs.
    """
    A, b = system.matrix, system.rhs
    if A.shape[0] == 0:
        return DofField(system.mesh, system.expand(np.zeros(0)))
    bnorm = np.linalg.norm(b)
    if factor is None:
        factor = FactorizedSPD(A)
    x = factor.solve(b)

    def bad(xv):
        denom = bnorm + abs(A).max() * np.linalg.norm(xv)
        return np.linalg.norm(A @ xv - b) > rtol * denom

    if bnorm > 0.0 and bad(x):
        dia = A.diagonal()
        if np.any(dia <= 0.0):
            raise NotPositiveDefinite("nonpositive diagonal on free dofs")
        M = sp.diags(1.0 / dia)
        x, info = spla.cg(A, b, x0=x, rtol=rtol * 1e-2, maxiter=20 * A.shape[0], M=M)
        if info != 0 or bad(x):
            raise MaxIterations("iterative fallback did not reach tolerance")
    return DofField(system.mesh, system.expand(x))


def field_gradients(mesh, values):
    """Per-triangle constant gradient (du_i/dx_j) of a P1 dof vector."""
    _, grads = triangle_geometry(mesh.vertices, mesh.triangles)
    vals = np.asarray(values).reshape(-1, 2)
    nodal = vals[mesh.triangles]            # (nt, 3, 2) u_i at corners
    return np.einsum("eia,eib->eab", nodal, grads)


def strain_from_grad(gradu):
    return 0.5 * (gradu + np.swapaxes(gradu, -1, -2))


def h1_seminorm(mesh, values):
    """Broken H1 seminorm of a dof vector over both subdomains."""
    g = field_gradients(mesh, values)
    area, _ = triangle_geometry(mesh.vertices, mesh.triangles)
    return float(np.sqrt(np.sum(area * np.sum(g * g, axis=(1, 2)))))


def boundary_misfit(mesh, values, z_values, edges=None):
    """1/2 int |u - z|^2 over the observation boundary (2-pt Gauss)."""
    if edges is None:
        edges = mesh.observation_edges
    d = (np.asarray(values) - np.asarray(z_values)).reshape(-1, 2)
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    L = np.hypot(*(b - a).T)
    da = d[edges[:, 0]]
    db = d[edges[:, 1]]
    total = 0.0
    for t in GAUSS2:
        dv = da + t * (db - da)
        total += np.sum(0.5 * L * np.sum(dv * dv, axis=1))
    return 0.5 * float(total)
