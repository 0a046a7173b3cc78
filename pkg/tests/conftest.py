"""Shared fixtures; the heavy solves and pipeline runs are session-scoped."""

import numpy as np
import pytest

from polyplateau import (
    DiscSurface,
    Polygon,
    build_mesh,
    circle,
    harmonic_extension,
    perturbed_circle,
    solve,
)
from polyplateau.convergence import ConvergenceOptions, run_sequence


SQUARE_VERTS = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
TETRA_VERTS = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
)


@pytest.fixture(scope="session")
def mesh16():
    return build_mesh(16)


@pytest.fixture(scope="session")
def mesh24():
    return build_mesh(24)


@pytest.fixture(scope="session")
def mesh32():
    return build_mesh(32)


@pytest.fixture(scope="session")
def square_polygon():
    return Polygon(SQUARE_VERTS, (0, 1, 2))


@pytest.fixture(scope="session")
def tetra_polygon():
    return Polygon(TETRA_VERTS, (0, 1, 2))


@pytest.fixture(scope="session")
def gon64_polygon():
    th = 2.0 * np.pi * np.arange(64) / 64
    verts = np.column_stack([np.cos(th), np.sin(th), np.zeros(64)])
    return Polygon(verts, (0, 21, 43))


@pytest.fixture(scope="session")
def square_solution(square_polygon, mesh24):
    return solve(square_polygon, mesh24)


@pytest.fixture(scope="session")
def tetra_solution(tetra_polygon, mesh24):
    return solve(tetra_polygon, mesh24)


@pytest.fixture(scope="session")
def gon64_solution(gon64_polygon, mesh32):
    return solve(gon64_polygon, mesh32)


def enneper_surface(mesh):
    u, v = mesh.nodes[:, 0], mesh.nodes[:, 1]
    values = np.column_stack(
        [u - u**3 / 3 + u * v**2, -v + v**3 / 3 - u**2 * v, u**2 - v**2]
    )
    return DiscSurface(mesh, values)


def power_surface(mesh, p):
    """Harmonic extension of (Re w^p, Im w^p, 0)."""
    w = mesh.nodes[:, 0] + 1j * mesh.nodes[:, 1]
    f = w**p
    full = np.column_stack([f.real, f.imag, np.zeros(mesh.nv)])
    return harmonic_extension(mesh, full[mesh.boundary_cycle])


@pytest.fixture(scope="session")
def enneper24(mesh24):
    return enneper_surface(mesh24)


@pytest.fixture(scope="session")
def circle_report():
    return run_sequence(circle(), [8, 16, 32, 64], 0.1, ConvergenceOptions(seed=11))


@pytest.fixture(scope="session")
def perturbed_report():
    return run_sequence(
        perturbed_circle(0.1, 3), [16, 32, 64, 128], 0.1, ConvergenceOptions(seed=11)
    )
