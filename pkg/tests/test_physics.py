import numpy as np
import pytest

from splitfwi.errors import (
    InputValidationError,
    PartitionError,
    ShapeError,
    StabilityError,
    ZeroEnergyError,
)
from splitfwi.physics import (
    AcquisitionGeometry,
    VelocityModel,
    WaveformRecord,
    default_geometry,
    differential_waveform,
    energy_distribution,
    generate_dataset,
    load_dataset,
    ricker_wavelet,
    save_dataset,
    simulate,
)

DT_FAST = 0.4 * 10.0 / 4500.0


def homogeneous(v=3000.0):
    return VelocityModel(grid=np.full((70, 70), v, np.float32), dx=10.0)


def test_default_geometry_shapes():
    geom = default_geometry()
    assert len(geom.source_cols) == 5
    assert len(geom.receiver_cols) == 70
    assert geom.n_t == 1000
    rec = simulate(homogeneous(), AcquisitionGeometry(
        source_cols=geom.source_cols, receiver_cols=geom.receiver_cols,
        n_t=40, dt=geom.dt, f0=geom.f0))
    assert rec.data.shape == (5, 40, 70)


def test_cfl_violation_names_admissible_dt():
    vm = homogeneous(4000.0)
    bad = AcquisitionGeometry(source_cols=(10,), receiver_cols=(0,), n_t=10, dt=0.01)
    with pytest.raises(StabilityError, match="require dt <="):
        simulate(vm, bad)


def test_zero_amplitude_source_gives_zero_record():
    geom = AcquisitionGeometry(
        source_cols=(10, 30), receiver_cols=tuple(range(70)),
        n_t=100, dt=DT_FAST, amplitude=0.0,
    )
    rec = simulate(homogeneous(), geom)
    np.testing.assert_array_equal(rec.data, np.zeros_like(rec.data))


def test_first_arrival_matches_travel_time():
    # source col 20, receiver col 40: 200 m at 3000 m/s -> 66.7 ms
    vm = homogeneous(3000.0)
    dt = 0.4 * 10.0 / 3000.0
    n_t = 300
    geom = AcquisitionGeometry(
        source_cols=(20,), receiver_cols=tuple(range(70)), n_t=n_t, dt=dt, f0=25.0
    )
    rec = simulate(vm, geom)
    trace = np.abs(rec.data[0, :, 40].astype(np.float64))
    src = np.abs(ricker_wavelet(25.0, n_t, dt))
    t = np.arange(n_t) * dt

    def onset(x):
        return t[np.argmax(x >= 0.1 * x.max())]

    estimated = onset(trace) - onset(src)
    expected = 200.0 / 3000.0
    assert abs(estimated - expected) / expected <= 0.05


def test_source_linearity():
    vm = homogeneous()
    base = AcquisitionGeometry(source_cols=(34,), receiver_cols=tuple(range(70)),
                               n_t=150, dt=DT_FAST, amplitude=1.0)
    scaled = AcquisitionGeometry(source_cols=(34,), receiver_cols=tuple(range(70)),
                                 n_t=150, dt=DT_FAST, amplitude=3.0)
    a = simulate(vm, base).data.astype(np.float64)
    b = simulate(vm, scaled).data.astype(np.float64)
    scale = np.abs(b).max()
    assert scale > 0
    assert np.abs(b - 3.0 * a).max() / scale <= 1e-6


def test_stability_no_nans_on_generated_models():
    for vm, rec in generate_dataset(3, 2, "faulted", geometry=default_geometry(n_t=200)):
        assert np.isfinite(rec.data).all()


class TestDifferential:
    def _geom(self, n_t=300, sources=(34,)):
        return AcquisitionGeometry(source_cols=sources, receiver_cols=tuple(range(70)),
                                   n_t=n_t, dt=DT_FAST, f0=15.0)

    def _pair(self):
        bg = np.full((70, 70), 3000.0, np.float32)
        bg[40:, :] = 3600.0
        roi = bg.copy()
        roi[25:45, 5:25] = 1800.0
        return VelocityModel(grid=roi), VelocityModel(grid=bg)

    def test_zero_contrast_is_zero(self):
        vm = homogeneous()
        rec = differential_waveform(vm, vm, self._geom(n_t=80))
        np.testing.assert_array_equal(rec.data, np.zeros_like(rec.data))

    def test_mirrored_roi_mirrors_record(self):
        roi, bg = self._pair()
        geom = self._geom()
        diff = differential_waveform(roi, bg, geom)
        roi_m = VelocityModel(grid=roi.grid[:, ::-1].copy())
        bg_m = VelocityModel(grid=bg.grid[:, ::-1].copy())
        geom_m = self._geom(sources=(69 - 34,))
        diff_m = differential_waveform(roi_m, bg_m, geom_m)
        scale = float(np.abs(diff.data).max())
        assert scale > 0
        assert np.abs(diff_m.data - diff.data[:, :, ::-1]).max() <= 1e-5 * scale

    def test_left_roi_reaches_right_receivers(self):
        roi, bg = self._pair()
        diff = differential_waveform(roi, bg, self._geom(n_t=1000))
        right_energy = float((diff.data[:, :, 35:].astype(np.float64) ** 2).sum())
        total = float((diff.data.astype(np.float64) ** 2).sum())
        assert right_energy / total > 0.02

    def test_geometry_mismatch(self):
        small = VelocityModel(grid=np.full((60, 60), 2000.0, np.float32))
        with pytest.raises(ShapeError):
            differential_waveform(homogeneous(), small, self._geom())


class TestEnergyDistribution:
    def test_point_mass(self):
        data = np.zeros((1, 4, 70), np.float32)
        data[0, 1, 3] = 2.0
        ed = energy_distribution(WaveformRecord(data=data), [(0, 35), (35, 70)])
        assert ed.group_fractions == (1.0, 0.0)
        ed_single = energy_distribution(
            WaveformRecord(data=data), [(i, i + 1) for i in range(70)]
        )
        assert ed_single.group_fractions[3] == 1.0

    def test_mirror_symmetric_split(self):
        geom = AcquisitionGeometry(source_cols=(15, 54), receiver_cols=tuple(range(70)),
                                   n_t=400, dt=DT_FAST, f0=15.0)
        rec = simulate(homogeneous(), geom)
        ed = energy_distribution(rec, [(0, 35), (35, 70)])
        assert abs(ed.group_fractions[0] - 0.5) <= 1e-6
        assert abs(sum(ed.group_fractions) - 1.0) <= 1e-9

    def test_left_roi_left_fraction_dominates(self):
        bg = np.full((70, 70), 3000.0, np.float32)
        bg[40:, :] = 3600.0
        roi = bg.copy()
        roi[25:45, 5:25] = 1800.0
        geom = AcquisitionGeometry(source_cols=(34,), receiver_cols=tuple(range(70)),
                                   n_t=1000, dt=DT_FAST, f0=15.0)
        diff = differential_waveform(VelocityModel(grid=roi), VelocityModel(grid=bg), geom)
        ed = energy_distribution(diff, [(0, 35), (35, 70)])
        assert ed.group_fractions[0] > 0.5

    def test_zero_record_rejected(self):
        rec = WaveformRecord(data=np.zeros((1, 4, 70), np.float32))
        with pytest.raises(ZeroEnergyError):
            energy_distribution(rec, [(0, 70)])

    def test_bad_partition_rejected(self):
        rec = WaveformRecord(data=np.ones((1, 2, 70), np.float32))
        with pytest.raises(PartitionError):
            energy_distribution(rec, [(0, 30), (40, 70)])


class TestGenerateDataset:
    def test_deterministic(self):
        geom = default_geometry(n_t=60)
        a = generate_dataset(5, 2, "layered", geometry=geom)
        b = generate_dataset(5, 2, "layered", geometry=geom)
        for (vma, reca), (vmb, recb) in zip(a, b):
            np.testing.assert_array_equal(vma.grid, vmb.grid)
            np.testing.assert_array_equal(reca.data, recb.data)

    def test_velocities_in_range(self):
        geom = default_geometry(n_t=40)
        for family in ("layered", "faulted"):
            for vm, _ in generate_dataset(11, 3, family, geometry=geom):
                assert float(vm.grid.min()) >= 1500.0
                assert float(vm.grid.max()) <= 4500.0

    def test_layered_columns_constant(self):
        geom = default_geometry(n_t=40)
        for vm, _ in generate_dataset(2, 2, "layered", geometry=geom):
            np.testing.assert_array_equal(vm.grid, np.tile(vm.grid[:, :1], (1, 70)))

    def test_faulted_has_lateral_variation(self):
        geom = default_geometry(n_t=40)
        varied = [
            bool((vm.grid != np.tile(vm.grid[:, :1], (1, 70))).any())
            for vm, _ in generate_dataset(4, 3, "faulted", geometry=geom)
        ]
        assert any(varied)

    def test_unknown_family(self):
        with pytest.raises(InputValidationError):
            generate_dataset(1, 1, "swirly")

    def test_dataset_files_round_trip(self, tmp_path):
        geom = default_geometry(n_t=50)
        samples = generate_dataset(9, 2, "layered", geometry=geom)
        save_dataset(samples, tmp_path / "ds", seed=9, family="layered", geometry=geom)
        loaded, manifest = load_dataset(tmp_path / "ds")
        assert manifest["seed"] == 9
        assert manifest["geometry"]["n_t"] == 50
        for (vma, reca), (vmb, recb) in zip(samples, loaded):
            np.testing.assert_array_equal(vma.grid, vmb.grid)
            np.testing.assert_array_equal(reca.data, recb.data)
