"""
==============================================================================
Unit Tests for Pitch Schedules and Blade Response
==============================================================================
"""

import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))


def _plate(nx=9, ny=5):
    from fem import PlateModel
    from meshing import gen_rect_mesh

    return PlateModel(gen_rect_mesh(0.4, 0.2, nx, ny))


def _layup(angle):
    from laminate import Layup, Material

    return Layup.from_degrees([angle] * 6, Material.as4(), symmetric=True)


def _small_schedule():
    """A few hundred pascal around cruise, so rotations stay small."""
    from blade import PitchSchedule

    return PitchSchedule.from_rows([
        (0.8, -0.2, 9.9, 1.0),
        (1.0, 0.0, 10.0, 1.0),
        (1.1, 0.1, 10.05, 1.0),
        (1.3, 0.3, 10.2, 1.0),
    ])


class TestSchedule:
    """Tests for PitchSchedule."""

    def test_reference_layout(self):
        """Five entries, cruise at 250 kPa, required changes from 16 deg."""
        from blade import PitchSchedule

        schedule = PitchSchedule.reference()
        assert len(schedule.entries) == 5
        assert schedule.cruise_index == 2
        assert schedule.cruise.pressure == pytest.approx(250e3)
        assert len(schedule.off_design()) == 4
        assert math.degrees(schedule.entries[0].delta_phi_required) == pytest.approx(12.56 - 16.0)
        assert schedule.max_abs_delta_pressure() == pytest.approx(70e3)

    def test_missing_cruise_row(self):
        """from_rows needs a delta P = 0 row."""
        from blade import PitchSchedule
        from utils.errors import InvalidInputError

        with pytest.raises(InvalidInputError):
            PitchSchedule.from_rows([(180.0, -70.0, 12.56, 1.0), (300.0, 50.0, 19.3, 1.0)])

    def test_two_cruise_entries_rejected(self):
        """Exactly one cruise entry is allowed."""
        from pydantic import ValidationError
        from blade import PitchPoint, PitchSchedule

        cruise = PitchPoint(pressure=250e3, delta_pressure=0.0, phi_required=0.28, delta_phi_required=0.0)
        with pytest.raises(ValidationError):
            PitchSchedule(entries=[cruise, cruise])

    def test_with_weight(self):
        """Only the addressed entry changes weight."""
        from blade import PitchSchedule

        schedule = PitchSchedule.reference().with_weight(270e3, 4.0)
        assert [e.weight for e in schedule.entries] == [1.0, 1.0, 1.0, 4.0, 1.0]

    def test_with_weight_unknown_pressure(self):
        """Unknown pressures are an input error."""
        from blade import PitchSchedule
        from utils.errors import InvalidInputError

        with pytest.raises(InvalidInputError):
            PitchSchedule.reference().with_weight(275e3, 2.0)

    def test_sorted_by_delta_pressure(self):
        """Sorted view is ascending in delta P."""
        from blade import PitchSchedule

        dp = [e.delta_pressure for e in PitchSchedule.reference().sorted_by_delta_pressure()]
        assert dp == sorted(dp)


class TestTwistRate:
    """Tests for tip twist extraction."""

    def test_mirrored_layup_reverses_twist(self):
        """Slope at +30 deg is minus the slope at 150 deg on a symmetric mesh."""
        from blade import twist_rate
        from laminate import build_stiffness

        model = _plate()
        s30 = twist_rate(model, build_stiffness(_layup(30.0)))
        s150 = twist_rate(model, build_stiffness(_layup(30.0).mirrored()))
        assert abs(s30) > 0.0
        assert s150 == pytest.approx(-s30, rel=1e-6)

    def test_on_axis_layup_does_not_twist(self):
        """0 deg fibers give no bend-twist coupling."""
        from blade import twist_rate
        from laminate import build_stiffness

        model = _plate()
        s0 = twist_rate(model, build_stiffness(_layup(0.0)))
        s30 = twist_rate(model, build_stiffness(_layup(30.0)))
        assert abs(s0) < 1e-8 * abs(s30)

    def test_pitch_measures_agree_for_small_loads(self):
        """Chord and rotation measures agree to first order."""
        from blade import PitchExtraction, tip_pitch_change
        from fem import LoadCase
        from laminate import build_stiffness

        model = _plate(17, 9)
        disp = model.solve_case(build_stiffness(_layup(30.0)), LoadCase(pressure=100.0))
        chord = tip_pitch_change(model.mesh, disp, PitchExtraction.CHORD)
        rotation = tip_pitch_change(model.mesh, disp, PitchExtraction.ROTATION)
        assert np.sign(chord) == np.sign(rotation)
        assert rotation == pytest.approx(chord, rel=0.25)

    def test_rake_is_mean_tip_deflection(self):
        """Rake averages w at the two markers."""
        from blade import rake_deflection
        from fem import LoadCase
        from laminate import build_stiffness

        model = _plate()
        disp = model.solve_case(build_stiffness(_layup(30.0)), LoadCase(pressure=100.0))
        mesh = model.mesh
        expected = 0.5 * (disp.w[mesh.tip_leading] + disp.w[mesh.tip_trailing])
        assert rake_deflection(mesh, disp) == pytest.approx(expected)
        assert expected > 0.0

    def test_missing_markers(self):
        """No tip markers is a configuration error."""
        from blade import tip_pitch_change
        from fem import DisplacementField
        from meshing import Mesh, gen_rect_mesh
        from utils.errors import ConfigurationError

        base = gen_rect_mesh(0.4, 0.2, 3, 3)
        mesh = Mesh(nodes=base.nodes, elements=base.elements, clamped_nodes=base.clamped_nodes)
        with pytest.raises(ConfigurationError):
            tip_pitch_change(mesh, DisplacementField.zeros(mesh.node_count))


class TestResponseCurve:
    """Tests for response_curve."""

    def test_slope_matches_twist_rate(self):
        """Fitted slope equals the linearized twist rate."""
        from blade import response_curve, twist_rate
        from laminate import build_stiffness

        model = _plate()
        layup = _layup(30.0)
        response = response_curve(model, layup, _small_schedule())
        assert response.slope == pytest.approx(twist_rate(model, build_stiffness(layup)), rel=1e-3)
        assert response.r_squared() > 0.9999

    def test_points_sorted_and_cruise_unloaded(self):
        """Points ascend in delta P; cruise has zero response."""
        from blade import response_curve

        response = response_curve(_plate(), _layup(30.0), _small_schedule())
        dp = [p.delta_pressure for p in response.points]
        assert dp == sorted(dp)
        cruise = [p for p in response.points if p.delta_pressure == 0.0][0]
        assert cruise.delta_phi == 0.0 and cruise.rake == 0.0

    def test_threads_do_not_change_result(self):
        """Parallel right-hand sides give identical points."""
        from blade import response_curve

        model = _plate()
        one = response_curve(model, _layup(30.0), _small_schedule(), threads=1)
        two = response_curve(model, _layup(30.0), _small_schedule(), threads=2)
        assert one == two

    def test_achieved_pitch(self):
        """Achieved pitch is cruise pitch plus slope * delta P."""
        from blade import PitchResponse, ResponsePoint

        schedule = _small_schedule()
        slope = math.radians(0.5) / 1e3
        response = PitchResponse.from_points([
            ResponsePoint(delta_pressure=e.delta_pressure, delta_phi=slope * e.delta_pressure, rake=0.0)
            for e in schedule.entries
        ])
        assert response.slope == pytest.approx(slope)
        assert response.r_squared() == pytest.approx(1.0)
        assert response.achieved_pitch_deg(schedule) == pytest.approx([9.9, 10.0, 10.05, 10.15])

    def test_write_csv(self, tmp_path):
        """CSV has the documented header and one row per point."""
        from blade import response_curve, write_response_csv

        response = response_curve(_plate(), _layup(30.0), _small_schedule())
        path = tmp_path / "response.csv"
        write_response_csv(path, response)
        lines = path.read_text().splitlines()
        assert lines[0] == "deltaP_kPa,dphi_deg,rake_mm"
        assert len(lines) == 5
        assert lines[1].startswith("-0.200000,")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
