"""Shared fixtures. The expensive identification runs are session-scoped and
reused by the driver, shape and acceptance tests; acceptance pass/fail lines
are collected and echoed in the terminal summary."""

import pytest

from crackid import driver, solvers
from crackid.geometry import build_mesh

ACCEPTANCE_LINES = []


def record_acceptance(name, ok, detail):
    line = "ACCEPTANCE %-14s %s  (%s)" % (name, "PASS" if ok else "FAIL", detail)
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def contact_config():
    return driver.ExperimentConfig(load_case="contact")


@pytest.fixture(scope="session")
def stretch_config():
    return driver.ExperimentConfig(load_case="stretch")


@pytest.fixture(scope="session")
def contact_measurement(contact_config):
    """PDAS measurement of the contact case at h = 1e-2 (reference setup)."""
    meas, z, aset, report, mesh = driver.synthesize_measurement(contact_config)
    return dict(meas=meas, z=z, aset=aset, report=report, mesh=mesh)


@pytest.fixture(scope="session")
def stretch_measurement(stretch_config):
    meas, z, aset, report, mesh = driver.synthesize_measurement(stretch_config)
    return dict(meas=meas, z=z, aset=aset, report=report, mesh=mesh)


@pytest.fixture(scope="session")
def contact_state(contact_config, contact_measurement):
    """Penalty state + adjoint at the flat initial interface (contact case)."""
    cfg = contact_config
    laws, elast = cfg.cohesive(), cfg.elasticity()
    g = cfg.traction()
    h = cfg.resolved_h_identify()
    psi = cfg.initial_graph()
    mesh = build_mesh(psi, h)
    u, rep, op, factor = solvers.solve_penalty_state(
        mesh, laws, elast, g, cfg.eps, return_operator=True)
    z_vec = driver.interp_measurement(mesh, contact_measurement["meas"])
    v, _ = solvers.solve_adjoint(mesh, laws, elast, u, z_vec, cfg.eps,
                                 stiffness=op.K, factor=factor)
    return dict(cfg=cfg, laws=laws, elast=elast, g=g, h=h, psi=psi, mesh=mesh,
                u=u, v=v, z_vec=z_vec, report=rep, op=op)


@pytest.fixture(scope="session")
def contact_run(contact_config, contact_measurement):
    """Full 200-iteration contact identification (reference experiment)."""
    return driver.identify(contact_config, contact_measurement["meas"])


@pytest.fixture(scope="session")
def stretch_run(stretch_config, stretch_measurement):
    return driver.identify(stretch_config, stretch_measurement["meas"])


@pytest.fixture(scope="session")
def eps_sensitivity_run(contact_measurement):
    """Contact identification at the insufficiently small eps = 1e-5.

    Runs on the 1/50-column mesh with a longer horizon: the compliance-
    limited plateau (where the ratio curves start climbing again) is only
    reached after the default budget at the default mesh.
    """
    cfg = driver.ExperimentConfig(load_case="contact", eps=1e-5,
                                  h_identify=1.0 / 50.0, n_max=600)
    return driver.identify(cfg, contact_measurement["meas"])
