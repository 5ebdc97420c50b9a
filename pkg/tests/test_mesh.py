import numpy as np
import pytest

from drift_spectra.errors import AssemblyError, MeshError
from drift_spectra.mesh import (TAG_BOTTOM, TAG_LATERAL, TAG_TOP,
                                IntervalDomain, ThinDomainSpec,
                                build_interval_mesh, build_mapped_grid)
from drift_spectra.weights import WeightSpec


def test_uniform_mesh_nodes():
    mesh = build_interval_mesh(IntervalDomain(0.0, 1.0), 4)
    assert np.array_equal(mesh.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    mesh = build_interval_mesh(IntervalDomain(0.0, 2.0), 1)
    assert np.array_equal(mesh.nodes, [0.0, 2.0])


def test_mesh_errors():
    with pytest.raises(MeshError):
        IntervalDomain(1.0, 0.0)
    with pytest.raises(MeshError):
        build_interval_mesh(IntervalDomain(0.0, 1.0), 0)
    with pytest.raises(MeshError):
        ThinDomainSpec(IntervalDomain(0.0, 1.0), WeightSpec.euclidean(), -0.1)


def test_constant_height_grid():
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0), WeightSpec.from_f("1"), 0.1)
    grid = build_mapped_grid(spec, 2, 2)
    assert grid.num_nodes == 9
    y = grid.physical_y().reshape(3, 3)
    for i in range(3):
        assert np.allclose(y[i], [0.0, 0.05, 0.1], atol=1e-15)


def test_top_boundary_height_follows_density():
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0),
                          WeightSpec.from_f("sin(pi*x)^2"), 0.2)
    grid = build_mapped_grid(spec, 4, 2)
    y = grid.physical_y().reshape(5, 3)
    assert y[2, 2] == pytest.approx(0.2 * 1.0)  # x = 0.5: sin^2 = 1


def test_boundary_tags_partition():
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0), WeightSpec.from_f("1"), 0.1)
    nx, nt = 5, 3
    grid = build_mapped_grid(spec, nx, nt)
    tags = grid.boundary_tags
    # corner (a, 1) resolves to the lateral tag
    corner = grid.node_index(0, nt)
    assert corner in tags[TAG_LATERAL]
    assert corner not in tags[TAG_TOP]
    # disjoint
    all_tagged = np.concatenate([tags[TAG_BOTTOM], tags[TAG_TOP], tags[TAG_LATERAL]])
    assert len(all_tagged) == len(set(all_tagged.tolist()))
    # cover exactly the boundary nodes
    boundary = {grid.node_index(i, j)
                for i in range(nx + 1) for j in range(nt + 1)
                if i in (0, nx) or j in (0, nt)}
    assert set(all_tagged.tolist()) == boundary


def test_cell_areas_match_height_integral():
    # cubic density: the 2x2 Gauss rule integrates eps*f exactly
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0),
                          WeightSpec.from_f("1 + x + x^2 + x^3"), 0.3)
    grid = build_mapped_grid(spec, 7, 3)
    total = float(np.sum(grid.cell_areas()))
    exact = 0.3 * (1 + 1 / 2 + 1 / 3 + 1 / 4)
    assert abs(total - exact) <= 1e-10 * exact


def test_unit_volume_density_gives_volume_epsilon():
    # normalized density (integral one): the thin volume equals epsilon
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0),
                          WeightSpec.from_f("2*sin(pi*x)^2"), 0.05)
    grid = build_mapped_grid(spec, 400, 3)
    assert float(np.sum(grid.cell_areas())) == pytest.approx(0.05, rel=1e-6)


def test_nonpositive_height_reports_location():
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0), WeightSpec.from_f("cos(pi*x)"), 0.1)
    with pytest.raises(AssemblyError) as err:
        build_mapped_grid(spec, 8, 2)
    assert "x =" in str(err.value)


def test_degenerate_counts():
    spec = ThinDomainSpec(IntervalDomain(0.0, 1.0), WeightSpec.from_f("1"), 0.1)
    with pytest.raises(MeshError):
        build_mapped_grid(spec, 1, 2)
    with pytest.raises(MeshError):
        build_mapped_grid(spec, 2, 1)
