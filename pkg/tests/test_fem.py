"""
==============================================================================
Unit Tests for the CS-DSG3 Plate Solver
==============================================================================
Element properties, patch tests, assembly and constrained solves, plus the
cantilever reference deflections of the validation plate.
==============================================================================
"""

import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))


def _isotropic_laminate(thickness=0.1, e=1e9, nu=0.3):
    from laminate import Layup, Material, build_stiffness

    m = Material.isotropic(e, nu, thickness)
    return build_stiffness(Layup.from_degrees([0], m))


def _plate_laminate(angle=40.0):
    """24 plies AS4 at one angle, 3 mm."""
    from laminate import Layup, Material, build_stiffness

    return build_stiffness(Layup.from_degrees([angle] * 12, Material.as4(), symmetric=True))


class _ScaledFactor:
    """LU stand-in whose solves are off by a constant factor."""

    def __init__(self, lu, factor):
        self._lu = lu
        self._factor = factor

    def solve(self, rhs):
        return self._factor * self._lu.solve(rhs)


def _field(mesh, **components):
    """Nodal field from callables of (x, y) keyed by u, v, w, theta_x, theta_y."""
    from fem import DisplacementField

    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    values = np.zeros((mesh.node_count, 5))
    for k, name in enumerate(("u", "v", "w", "theta_x", "theta_y")):
        if name in components:
            values[:, k] = components[name](x, y)
    return DisplacementField(values)


class TestElement:
    """Tests for the smoothed element."""

    def test_geometry_symbols(self):
        """a, b, c, d and the signed area follow the documented identity."""
        from fem import ElementGeometry

        elem = ElementGeometry(np.array([[0.0, 0.0], [2.0, 0.5], [0.5, 1.0]]))
        assert (elem.a, elem.b, elem.c, elem.d) == (2.0, 0.5, 1.0, 0.5)
        assert elem.area == pytest.approx(0.5 * (2.0 * 1.0 - 0.5 * 0.5))

    def test_subdivision_areas(self):
        """The three sub-triangles tile the element."""
        from fem import ElementGeometry, subdivide

        elem = ElementGeometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.2, 0.7]]))
        subs = subdivide(elem)
        assert len(subs) == 3
        assert all(s.area > 0 for s in subs)
        assert sum(s.area for s in subs) == pytest.approx(elem.area)

    def test_single_element_zero_modes(self):
        """K_e is symmetric PSD with 6 rigid modes plus one spurious shear mode."""
        from fem import ElementGeometry, smooth_element

        elem = ElementGeometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]]))
        k = smooth_element(elem, _isotropic_laminate()).k
        assert np.allclose(k, k.T)
        eig = np.linalg.eigvalsh(k)
        assert eig.min() > -1e-9 * eig.max()
        assert int(np.sum(eig < 1e-9 * eig.max())) == 7

    def test_rigid_modes_in_kernel(self):
        """Rigid-body modes produce no element strain."""
        from fem import ElementGeometry, rigid_body_modes, smooth_element

        coords = np.array([[0.1, 0.2], [1.0, 0.0], [0.3, 0.9]])
        matrices = smooth_element(ElementGeometry(coords), _isotropic_laminate())
        modes = rigid_body_modes(coords)
        for b in (matrices.bp, matrices.bb, matrices.bs):
            assert np.allclose(b @ modes, 0.0, atol=1e-12)

    def test_node_numbering_invariance(self):
        """Cycling the node order permutes K_e consistently."""
        from fem import ElementGeometry, smooth_element

        coords = np.array([[0.0, 0.0], [1.0, 0.2], [0.4, 0.8]])
        lam = _plate_laminate()
        k0 = smooth_element(ElementGeometry(coords), lam).k
        k1 = smooth_element(ElementGeometry(coords[[1, 2, 0]]), lam).k
        perm = np.concatenate([np.arange(5) + 5 * n for n in (1, 2, 0)])
        assert np.allclose(k1, k0[np.ix_(perm, perm)], rtol=1e-10, atol=1e-12 * np.abs(k0).max())

    def test_stabilization_factor(self):
        """t^2 / (t^2 + alpha h^2)."""
        from fem import shear_stabilization_factor

        assert shear_stabilization_factor(0.01, 0.1, 0.1) == pytest.approx(1e-4 / (1e-4 + 1e-3))
        assert float(shear_stabilization_factor(1.0, 0.0)) == 1.0

    def test_zero_area_rejected(self):
        """Collinear nodes are a validation error."""
        from fem import ElementGeometry, smooth_element
        from utils.errors import MeshValidationError

        with pytest.raises(MeshValidationError):
            smooth_element(ElementGeometry(np.array([[0, 0], [1, 0], [2, 0]])), _isotropic_laminate())


class TestPatch:
    """Constant-strain patch tests on a two-element square."""

    def test_cylindrical_bend(self):
        """theta_x = x, w = -x^2/2 gives kappa = [1, 0, 0] and zero shear."""
        from fem import PlateModel, element_strains
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(1.0, 1.0, 2, 2))
        disp = _field(model.mesh, theta_x=lambda x, y: x, w=lambda x, y: -0.5 * x ** 2)
        strains = element_strains(model, disp)
        assert np.allclose(strains.kappa, [1.0, 0.0, 0.0], atol=1e-10)
        assert np.allclose(strains.gamma, 0.0, atol=1e-10)
        assert np.allclose(strains.eps, 0.0, atol=1e-10)

    def test_twist(self):
        """theta_x = y, theta_y = x, w = -xy gives kappa = [0, 0, 2]."""
        from fem import PlateModel, element_strains
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(1.0, 1.0, 3, 3))
        disp = _field(
            model.mesh,
            theta_x=lambda x, y: y, theta_y=lambda x, y: x, w=lambda x, y: -x * y,
        )
        strains = element_strains(model, disp)
        assert np.allclose(strains.kappa, [0.0, 0.0, 2.0], atol=1e-10)
        assert np.allclose(strains.gamma, 0.0, atol=1e-10)

    def test_membrane_and_shear_states(self):
        """Linear in-plane and transverse fields are reproduced exactly."""
        from fem import PlateModel, element_strains
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(1.0, 1.0, 2, 2))
        disp = _field(model.mesh, u=lambda x, y: 2 * x + y, v=lambda x, y: 3 * y, w=lambda x, y: x + 0.5 * y)
        strains = element_strains(model, disp)
        assert np.allclose(strains.eps, [2.0, 3.0, 1.0], atol=1e-10)
        assert np.allclose(strains.gamma, [1.0, 0.5], atol=1e-10)


class TestAssembly:
    """Tests for global assembly and loads."""

    def test_global_symmetry_and_rigid_kernel(self):
        """K is symmetric with exactly the six rigid modes in its kernel."""
        from fem import PlateModel, rigid_body_modes
        from meshing import gen_rect_mesh

        mesh = gen_rect_mesh(1.0, 1.0, 4, 4)
        k = PlateModel(mesh).assemble(_isotropic_laminate()).toarray()
        assert np.allclose(k, k.T)
        assert np.allclose(k @ rigid_body_modes(mesh.nodes), 0.0, atol=1e-8 * np.abs(k).max())
        eig = np.linalg.eigvalsh(k)
        assert int(np.sum(eig < 1e-10 * eig.max())) == 6

    def test_functional_assemble_matches_model(self):
        """assemble(mesh, laminate) equals the model's matrix."""
        from fem import PlateModel, assemble
        from meshing import gen_rect_mesh

        mesh = gen_rect_mesh(0.4, 0.2, 4, 3)
        lam = _plate_laminate()
        a = assemble(mesh, lam).toarray()
        b = PlateModel(mesh).assemble(lam).toarray()
        assert np.array_equal(a, b)

    def test_pressure_load_total(self):
        """Nodal w forces sum to P times the area; other dofs are unloaded."""
        from fem import LoadCase, pressure_load
        from meshing import gen_rect_mesh

        mesh = gen_rect_mesh(0.4, 0.2, 5, 4)
        f = pressure_load(mesh, LoadCase(pressure=250.0))
        assert f[2::5].sum() == pytest.approx(250.0 * 0.08)
        assert np.all(np.delete(f, np.arange(2, f.size, 5)) == 0.0)

    def test_element_pressure_length_checked(self):
        """A per-element load must match the element count."""
        from fem import LoadCase, pressure_load
        from meshing import gen_rect_mesh
        from utils.errors import InvalidInputError

        mesh = gen_rect_mesh(0.4, 0.2, 3, 3)
        with pytest.raises(InvalidInputError):
            pressure_load(mesh, LoadCase(element_pressures=(1.0, 2.0)))


class TestSolve:
    """Tests for constrained solves."""

    def test_linearity(self):
        """delta(alpha P) = alpha delta(P)."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 9, 5))
        lam = _plate_laminate()
        ctx = model.context(lam)
        d1 = ctx.solve(model.load_vector(LoadCase(pressure=100.0)))
        d3 = ctx.solve(model.load_vector(LoadCase(pressure=300.0)))
        assert np.allclose(d3.values, 3.0 * d1.values, rtol=1e-9, atol=1e-15)

    def test_clamped_nodes_fixed(self):
        """Clamped dofs are zero and membrane dofs vanish for B = 0."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 9, 5))
        lam = _plate_laminate()
        assert model.uses_bending_reduction(lam)
        disp = model.solve_case(lam, LoadCase(pressure=100.0))
        clamped = sorted(model.mesh.clamped_nodes)
        assert np.all(disp.values[clamped] == 0.0)
        assert np.all(disp.u == 0.0) and np.all(disp.v == 0.0)
        assert disp.max_deflection() > 0.0

    def test_reduction_matches_full_solve(self):
        """Bending-only and full solves agree for a symmetric layup."""
        from fem import LoadCase, PlateModel, SolverOptions
        from meshing import gen_rect_mesh

        mesh = gen_rect_mesh(0.4, 0.2, 7, 5)
        lam = _plate_laminate(25.0)
        reduced = PlateModel(mesh).solve_case(lam, LoadCase(pressure=100.0))
        full = PlateModel(mesh, SolverOptions(reduce_uncoupled=False)).solve_case(lam, LoadCase(pressure=100.0))
        assert np.allclose(reduced.w, full.w, rtol=1e-8, atol=1e-14)

    def test_unsymmetric_layup_solves_all_dofs(self):
        """B != 0 activates membrane response."""
        from fem import LoadCase, PlateModel
        from laminate import Layup, Material, build_stiffness
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 7, 5))
        lam = build_stiffness(Layup.from_degrees([0, 90] * 6, Material.as4()))
        assert not model.uses_bending_reduction(lam)
        disp = model.solve_case(lam, LoadCase(pressure=100.0))
        assert np.abs(disp.u).max() > 0.0

    def test_zero_load(self):
        """Zero pressure returns the zero field."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 5, 5))
        disp = model.solve_case(_plate_laminate(), LoadCase(pressure=0.0))
        assert disp.max_deflection() == 0.0

    def test_unclamped_plate_is_singular(self):
        """No clamped nodes names all six rigid modes."""
        from fem import RIGID_MODE_NAMES, solve
        from meshing import Mesh, gen_rect_mesh
        from fem import PlateModel
        from utils.errors import SingularSystemError

        base = gen_rect_mesh(0.4, 0.2, 3, 3)
        mesh = Mesh(nodes=base.nodes, elements=base.elements)
        k = PlateModel(mesh).assemble(_plate_laminate())
        with pytest.raises(SingularSystemError) as info:
            solve(k, np.zeros(k.shape[0]), mesh.clamped_nodes, nodes=mesh.nodes)
        assert set(info.value.free_modes) == set(RIGID_MODE_NAMES)

    def test_single_clamped_node_leaves_rotations_free(self):
        """One clamped node cannot stop rotations about it."""
        from fem import SolverContext, PlateModel
        from meshing import gen_rect_mesh
        from utils.errors import SingularSystemError

        mesh = gen_rect_mesh(0.4, 0.2, 3, 3)
        k = PlateModel(mesh).assemble(_plate_laminate())
        with pytest.raises(SingularSystemError) as info:
            SolverContext(k, [0], nodes=mesh.nodes)
        assert len(info.value.free_modes) >= 1

    def test_direct_solver_guard(self):
        """Too many free dofs is a configuration error."""
        from fem import PlateModel, SolverOptions
        from meshing import gen_rect_mesh
        from utils.errors import ConfigurationError

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 5, 5), SolverOptions(max_dofs=10))
        with pytest.raises(ConfigurationError):
            model.context(_plate_laminate())

    def test_load_on_excluded_dof(self):
        """In-plane loads are rejected by a bending-only context."""
        from fem import PlateModel
        from meshing import gen_rect_mesh
        from utils.errors import InvalidInputError

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 5, 5))
        ctx = model.context(_plate_laminate())
        force = np.zeros(model.dof_count)
        force[5 * 24] = 1.0
        with pytest.raises(InvalidInputError):
            ctx.solve(force)

    def test_iterative_refinement_recovers_inexact_factor(self):
        """A slightly wrong factorization is corrected by refinement."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 9, 5))
        lam = _plate_laminate()
        force = model.load_vector(LoadCase(pressure=100.0))
        exact = model.context(lam).solve(force)

        ctx = model.context(lam)
        ctx._lu = _ScaledFactor(ctx._lu, 0.99)
        refined = ctx.solve(force)
        assert np.allclose(refined.values, exact.values, rtol=1e-5, atol=1e-12)

    def test_breakdown_raises(self):
        """A factorization that refinement cannot repair is a numerical error."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh
        from utils.errors import NumericalError

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 9, 5))
        ctx = model.context(_plate_laminate())
        ctx._lu = _ScaledFactor(ctx._lu, 0.5)
        with pytest.raises(NumericalError):
            ctx.solve(model.load_vector(LoadCase(pressure=100.0)))

    def test_thin_beam_limit(self):
        """Isotropic nu = 0 cantilever strip matches p L^4 / (8 D)."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh

        length, width, t, e, p = 1.0, 0.2, 1e-3, 200e9, 1.0
        model = PlateModel(gen_rect_mesh(length, width, 41, 9))
        disp = model.solve_case(_isotropic_laminate(t, e, 0.0), LoadCase(pressure=p))
        expected = p * length ** 4 / (8.0 * e * t ** 3 / 12.0)
        tip = np.isclose(model.mesh.nodes[:, 0], length)
        assert disp.w[tip].mean() == pytest.approx(expected, rel=0.03)

    def test_stabilization_softens_thick_plate(self):
        """Enabling shear stabilization never stiffens the plate."""
        from fem import LoadCase, PlateModel, SolverOptions
        from meshing import gen_rect_mesh

        mesh = gen_rect_mesh(0.4, 0.2, 5, 5)
        lam = _plate_laminate()
        plain = PlateModel(mesh).solve_case(lam, LoadCase(pressure=100.0)).max_deflection()
        stab = PlateModel(mesh, SolverOptions(stabilization=True)).solve_case(
            lam, LoadCase(pressure=100.0)).max_deflection()
        assert stab >= plain


class TestCantileverConvergence:
    """Validation plate: 0.4 x 0.2 m, 24 x 40 deg AS4, 100 Pa."""

    REFERENCE_MM = {5: 4.296, 10: 5.704, 20: 6.087, 40: 6.165, 80: 6.194}
    REFERENCE_SOLUTION_MM = 6.212
    # Coarse rows depend on the triangulation pattern more than fine ones.
    ROW_TOLERANCE = {5: 0.30, 10: 0.08, 20: 0.02, 40: 0.02, 80: 0.02}

    @pytest.fixture(scope="class")
    def max_w_mm(self):
        """Max deflection (mm) for every reference mesh, solved once."""
        from fem import LoadCase, PlateModel
        from meshing import gen_rect_mesh

        values = {}
        for n in self.REFERENCE_MM:
            model = PlateModel(gen_rect_mesh(0.4, 0.2, n, n))
            values[n] = model.solve_case(_plate_laminate(), LoadCase(pressure=100.0)).max_deflection() * 1e3
        return values

    def test_monotone_refinement(self, max_w_mm):
        """Max deflection increases with refinement."""
        values = [max_w_mm[n] for n in sorted(max_w_mm)]
        assert all(b > a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("n", [5, 10, 20, 40, 80])
    def test_reference_rows(self, max_w_mm, n):
        """Every mesh row lands near the reference deflection."""
        assert max_w_mm[n] == pytest.approx(self.REFERENCE_MM[n], rel=self.ROW_TOLERANCE[n])

    def test_finest_mesh_matches_reference_solution(self, max_w_mm):
        """80 x 80 within 1.5% of the converged 6.212 mm."""
        assert max_w_mm[80] == pytest.approx(self.REFERENCE_SOLUTION_MM, rel=0.015)

    def test_error_shrinks_on_fine_meshes(self, max_w_mm):
        """Distance to the converged value shrinks from 20 x 20 on."""
        errors = [abs(max_w_mm[n] - self.REFERENCE_SOLUTION_MM) for n in (20, 40, 80)]
        assert errors[0] > errors[1] > errors[2]


class TestVtkExport:
    """Tests for the VTK writer."""

    def test_write_vtk(self, tmp_path):
        """Legacy file carries the five point arrays."""
        pytest.importorskip("vtk")
        from fem import LoadCase, PlateModel, write_vtk
        from meshing import gen_rect_mesh

        model = PlateModel(gen_rect_mesh(0.4, 0.2, 4, 3))
        disp = model.solve_case(_plate_laminate(), LoadCase(pressure=100.0))
        path = tmp_path / "plate.vtk"
        write_vtk(path, model.mesh, disp)
        text = path.read_text()
        assert "UNSTRUCTURED_GRID" in text
        for name in ("thetax", "thetay"):
            assert name in text

    def test_node_count_mismatch(self, tmp_path):
        """Field and mesh must agree."""
        pytest.importorskip("vtk")
        from fem import DisplacementField, write_vtk
        from meshing import gen_rect_mesh
        from utils.errors import InvalidInputError

        with pytest.raises(InvalidInputError):
            write_vtk(tmp_path / "x.vtk", gen_rect_mesh(1, 1, 3, 3), DisplacementField.zeros(4))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
