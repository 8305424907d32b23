import json

import numpy as np
import pytest

import spectral_deform as sd
from conftest import SMALL_BEAM


class TestHatBeam:
    def test_default_beam_valid(self):
        mesh = sd.generate_hat_beam(sd.BeamParams())
        assert 500 <= mesh.n_vertices <= 20000
        areas = sd.laplacian.triangle_areas(mesh)
        assert areas.min() > 1e-12 * areas.mean()

    def test_doubling_axial_segments_doubles_n(self):
        a = sd.generate_hat_beam(SMALL_BEAM)
        b = sd.generate_hat_beam(
            sd.BeamParams(axial_segments=48, section_segments=4)
        )
        ratio = b.n_vertices / a.n_vertices
        assert 1.9 <= ratio <= 2.0

    def test_zero_height_rejected(self):
        with pytest.raises(ValueError, match="hat_height"):
            sd.BeamParams(hat_height=0.0)

    def test_vertex_ordering_axial_major(self, small_beam):
        x = small_beam.vertices[:, 0]
        # stations are contiguous blocks of constant x, ascending
        ring = np.flatnonzero(np.diff(x) > 0)[0] + 1
        stations = x.reshape(-1, ring)
        assert (np.ptp(stations, axis=1) == 0).all()
        assert (np.diff(stations[:, 0]) > 0).all()

    def test_n_outside_bounds_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            sd.generate_hat_beam(sd.BeamParams(axial_segments=2, section_segments=2))


class TestApplyDeformation:
    def test_identity_when_zero(self, small_beam):
        spec = sd.DeformationSpec("upward_bend", 0.0, 0.5, noise_sigma=0.0)
        state = sd.apply_deformation(small_beam, spec)
        np.testing.assert_array_equal(state.coordinates, small_beam.vertices)

    def test_up_down_negated(self, small_beam):
        up = sd.apply_deformation(
            small_beam, sd.DeformationSpec("upward_bend", 25.0, 0.4, noise_sigma=0.0)
        )
        down = sd.apply_deformation(
            small_beam, sd.DeformationSpec("downward_bend", 25.0, 0.4, noise_sigma=0.0)
        )
        np.testing.assert_allclose(
            up.coordinates[:, 2] - small_beam.vertices[:, 2],
            -(down.coordinates[:, 2] - small_beam.vertices[:, 2]),
            atol=1e-12,
        )
        np.testing.assert_array_equal(up.coordinates[:, :2], down.coordinates[:, :2])

    def test_crush_location_mirror(self, small_beam):
        a = sd.apply_deformation(
            small_beam, sd.DeformationSpec("axial_crush", 20.0, 0.3, noise_sigma=0.0)
        )
        b = sd.apply_deformation(
            small_beam, sd.DeformationSpec("axial_crush", 20.0, 0.7, noise_sigma=0.0)
        )
        ring = 20  # section_segments=4 profile
        fa = sd.displacement_field(a, small_beam).reshape(-1, ring)
        fb = sd.displacement_field(b, small_beam).reshape(-1, ring)
        np.testing.assert_allclose(fa, fb[::-1], atol=1e-9)

    def test_bend_near_isometric_at_default_amplitude(self, small_beam):
        amp = sd.bundle.MODE_DEFAULT_AMPLITUDE["upward_bend"]
        state = sd.apply_deformation(
            small_beam, sd.DeformationSpec("upward_bend", amp, 0.5, noise_sigma=0.0)
        )
        e = small_beam.edges()
        l0 = np.linalg.norm(
            small_beam.vertices[e[:, 0]] - small_beam.vertices[e[:, 1]], axis=1
        )
        l1 = np.linalg.norm(
            state.coordinates[e[:, 0]] - state.coordinates[e[:, 1]], axis=1
        )
        assert np.mean(np.abs(l1 - l0) / l0) <= 0.02

    def test_extreme_amplitude_warns(self, small_beam):
        with pytest.warns(UserWarning, match="inverts or collapses"):
            sd.apply_deformation(
                small_beam,
                sd.DeformationSpec("axial_crush", 500.0, 0.5, noise_sigma=0.0),
            )

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            sd.DeformationSpec("sideways", 1.0)
        with pytest.raises(ValueError):
            sd.DeformationSpec("upward_bend", -1.0)
        with pytest.raises(ValueError):
            sd.DeformationSpec("upward_bend", 1.0, location=1.5)
        with pytest.raises(ValueError):
            sd.DeformationSpec("axial_crush", 1.0, fold_count=0)


class TestGenerateBundle:
    def test_three_modes_distinguishable_by_field_correlation(self):
        bundle = sd.generate_bundle(SMALL_BEAM, (1, 1, 1), seed=0, noise_sigma=0.0)
        fields = [
            sd.displacement_field(s, bundle.base) for s in bundle.states
        ]
        corr = np.corrcoef(np.array(fields))
        # same-shape autocorrelation 1, cross-mode clearly lower
        for i, j in [(0, 1), (0, 2), (1, 2)]:
            assert corr[i, j] < 0.999

    def test_same_seed_bitwise_identical(self):
        a = sd.generate_bundle(SMALL_BEAM, (2, 2, 2), seed=42)
        b = sd.generate_bundle(SMALL_BEAM, (2, 2, 2), seed=42)
        assert a.manifest == b.manifest
        for sa, sb in zip(a.states, b.states):
            np.testing.assert_array_equal(sa.coordinates, sb.coordinates)

    def test_label_partition(self):
        bundle = sd.generate_bundle(SMALL_BEAM, (4, 3, 3), seed=1)
        labels = [s.label for s in bundle.states]
        assert labels == (
            ["upward_bend"] * 4 + ["downward_bend"] * 3 + ["axial_crush"] * 3
        )

    def test_states_share_base_size(self):
        bundle = sd.generate_bundle(SMALL_BEAM, (1, 1, 1), seed=2)
        for s in bundle.states:
            assert s.coordinates.shape == bundle.base.vertices.shape

    def test_manifest_roundtrip_bitwise(self):
        bundle = sd.generate_bundle(SMALL_BEAM, (2, 1, 2), seed=3)
        again = sd.bundle_from_manifest(bundle.manifest)
        np.testing.assert_array_equal(again.base.vertices, bundle.base.vertices)
        for sa, sb in zip(again.states, bundle.states):
            np.testing.assert_array_equal(sa.coordinates, sb.coordinates)


class TestDiskFormat:
    def test_save_load(self, tmp_path):
        bundle = sd.generate_bundle(SMALL_BEAM, (1, 1, 1), seed=4)
        sd.save_bundle(tmp_path / "b", bundle)
        assert (tmp_path / "b" / "base.off").exists()
        assert (tmp_path / "b" / "states" / "002.off").exists()
        loaded = sd.load_bundle(tmp_path / "b")
        assert [s.label for s in loaded.states] == [s.label for s in bundle.states]
        np.testing.assert_array_equal(
            loaded.base.vertices, bundle.base.vertices
        )
        np.testing.assert_array_equal(
            loaded.states[1].coordinates, bundle.states[1].coordinates
        )

    def test_manifest_schema(self, tmp_path):
        bundle = sd.generate_bundle(SMALL_BEAM, (1, 1, 1), seed=5)
        sd.save_bundle(tmp_path / "b", bundle)
        with open(tmp_path / "b" / "manifest.json") as f:
            doc = json.load(f)
        assert doc["version"] == 1
        assert doc["seed"] == 5
        assert len(doc["states"]) == 3
        for entry in doc["states"]:
            assert {"mode", "amplitude", "location", "fold_count",
                    "noise_sigma", "seed", "label"} <= set(entry)
