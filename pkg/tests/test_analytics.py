"""Consistency audits, break-even horizons, annualization, equivalence."""

import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecotrace.analytics import (
    HOURS_PER_YEAR,
    DeviceProfile,
    RunRecord,
    annualize,
    appliance_equivalents,
    break_even,
    break_even_throughput,
    consistency_check,
    power_comparison_rows,
    read_devices_csv,
)
from ecotrace.carbon import CarbonContext, CarbonIntensity, context_for
from ecotrace.errors import (
    EmptyDeviceList,
    InvalidRecord,
    NoCrossover,
    UtilizationOutOfRange,
    ZeroEnergy,
)


def record(**overrides):
    base = dict(
        id="r1", label="test run", architecture="LSTM", lang_pair="EN-FR",
        phase="train", precision="fp32", gpu_model="1080Ti", n_gpus=4,
        elapsed_h=25.08, kwh=14.07, avg_power_w=142.05, region="IE",
    )
    base.update(overrides)
    return RunRecord(**base)


UNIT_CTX = CarbonContext(intensity=CarbonIntensity("UNIT", 200.0, 0.0), pue=1.0)


class TestRunRecord:
    def test_valid(self):
        record().validate()

    def test_zero_elapsed_rejected(self):
        with pytest.raises(InvalidRecord):
            record(elapsed_h=0.0).validate()

    def test_energy_above_board_limit_rejected(self):
        # 4 boards x 250 W TDP x 25.08 h = 25.08 kWh is the hard ceiling
        with pytest.raises(InvalidRecord, match="board limit"):
            record(kwh=26.0).validate()

    def test_unregistered_gpu_skips_ceiling(self):
        record(gpu_model="FutureGPU", kwh=26.0).validate()

    def test_workstation_power(self):
        # whole-workstation draw is energy over time, not the reading mean
        assert record(kwh=2.27, elapsed_h=5.06).workstation_power_w == pytest.approx(
            448.6166, abs=1e-3
        )


class TestConsistencyCheck:
    def test_published_train_run_passes(self):
        result = consistency_check(record())
        assert result.relative_error == pytest.approx(0.012829, abs=1e-5)
        assert result.ok

    def test_published_p100_train_run_passes(self):
        result = consistency_check(
            record(
                architecture="TRANS", gpu_model="P100", n_gpus=3,
                elapsed_h=5.06, kwh=2.27, avg_power_w=153.47, region="NL",
            )
        )
        assert result.relative_error == pytest.approx(0.026294, abs=1e-5)
        assert result.ok

    def test_half_energy_warns(self):
        implied = 142.05 * 4 * 25.08 / 1000.0
        result = consistency_check(record(kwh=implied / 2.0))
        assert result.relative_error == pytest.approx(1.0, abs=1e-12)
        assert not result.ok

    def test_zero_energy(self):
        with pytest.raises(ZeroEnergy):
            consistency_check(record(kwh=0.0))


class TestBreakEven:
    def test_published_en_fr_values(self):
        result = break_even(14.07, 157.80, 3.64, 188.75)
        assert result.hours == pytest.approx(336.995, abs=1e-2)
        assert result.days == pytest.approx(14.04, abs=1e-2)
        assert result.days == result.hours / 24.0

    def test_published_en_es_values(self):
        result = break_even(15.79, 158.51, 4.60, 170.02)
        assert result.hours == pytest.approx(972.198, abs=1e-2)
        assert result.days == pytest.approx(40.5, abs=0.1)

    def test_equal_training_energies_cross_immediately(self):
        assert break_even(5.0, 100.0, 5.0, 150.0).hours == 0.0

    def test_no_crossover_when_a_runs_hotter(self):
        with pytest.raises(NoCrossover):
            break_even(14.07, 188.75, 3.64, 157.80)

    @given(
        train_a=st.floats(min_value=1.0, max_value=100.0),
        delta_train=st.floats(min_value=0.1, max_value=50.0),
        power_a=st.floats(min_value=10.0, max_value=400.0),
        delta_power=st.floats(min_value=1.0, max_value=200.0),
        k=st.floats(min_value=0.25, max_value=8.0),
    )
    def test_scale_consistency(self, train_a, delta_train, power_a, delta_power, k):
        base = break_even(train_a + delta_train, power_a, train_a, power_a + delta_power)
        scaled = break_even(
            (train_a + delta_train) * k, power_a * k, train_a * k,
            (power_a + delta_power) * k,
        )
        assert scaled.hours == pytest.approx(base.hours, rel=1e-9)

    def test_throughput_normalized_variant(self):
        # A uses half the energy per unit; crossover after finite work
        units, hours_a, hours_b = break_even_throughput(
            10.0, 100.0, 100.0, 5.0, 100.0, 50.0
        )
        assert units == pytest.approx(5000.0)
        assert hours_a == pytest.approx(50.0)
        assert hours_b == pytest.approx(100.0)

    def test_throughput_no_crossover(self):
        with pytest.raises(NoCrossover):
            break_even_throughput(10.0, 100.0, 50.0, 5.0, 100.0, 100.0)


class TestAnnualize:
    def test_published_headline_scenario(self):
        # whole-workstation training draw, full utilization, NL grid
        power = 2.27 / 5.06 * 1000.0
        estimate = annualize(power, 1.0, context_for("NL"))
        assert estimate.kwh_per_year == pytest.approx(3929.88, abs=0.01)
        assert estimate.emission.mean_kg == pytest.approx(2495.46, abs=0.01)

    def test_hand_calculation(self):
        estimate = annualize(100.0, 0.5, UNIT_CTX)
        assert estimate.kwh_per_year == pytest.approx(438.0)
        assert estimate.emission.mean_kg == pytest.approx(87.6)
        assert estimate.emission.std_kg == 0.0

    def test_zero_utilization(self):
        estimate = annualize(100.0, 0.0, UNIT_CTX)
        assert estimate.kwh_per_year == 0.0
        assert (estimate.emission.mean_kg, estimate.emission.std_kg) == (0.0, 0.0)

    def test_utilization_out_of_range(self):
        with pytest.raises(UtilizationOutOfRange):
            annualize(100.0, 1.1, UNIT_CTX)

    @given(
        power=st.floats(min_value=1.0, max_value=2000.0),
        utilization=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_linearity_in_utilization(self, power, utilization):
        full = annualize(power, 1.0, UNIT_CTX)
        partial = annualize(power, utilization, UNIT_CTX)
        assert partial.kwh_per_year == pytest.approx(
            utilization * full.kwh_per_year, rel=1e-12
        )


class TestApplianceEquivalents:
    def test_ratio_of_two(self):
        estimate = annualize(200.0, 1.0, UNIT_CTX)  # 1752 kWh -> 350.4 kg
        device = DeviceProfile("half box", 100.0, 1.0)  # 175.2 kg
        rows, skipped = appliance_equivalents(estimate, [device], UNIT_CTX)
        assert rows[0].ratio == pytest.approx(2.0)
        assert skipped == []

    def test_zero_utilization_device_skipped_with_note(self):
        estimate = annualize(200.0, 1.0, UNIT_CTX)
        rows, skipped = appliance_equivalents(
            estimate,
            [DeviceProfile("mothballed", 100.0, 0.0), DeviceProfile("on", 100.0, 0.5)],
            UNIT_CTX,
        )
        assert [r.name for r in rows] == ["on"]
        assert skipped == ["mothballed: utilization 0, ratio undefined"]

    def test_sorted_descending_by_ratio(self):
        estimate = annualize(500.0, 1.0, UNIT_CTX)
        rows, _ = appliance_equivalents(
            estimate,
            [DeviceProfile("big", 400.0, 1.0), DeviceProfile("small", 10.0, 1.0)],
            UNIT_CTX,
        )
        assert [r.name for r in rows] == ["small", "big"]

    def test_bundled_sample_file_matches_spreadsheet_recomputation(self, tmp_path):
        from ecotrace.cli import _bundled_devices_path

        devices = read_devices_csv(_bundled_devices_path())
        assert devices, "bundled device file must not be empty"
        ctx = context_for("IE")
        estimate = annualize(448.6166, 1.0, ctx)
        rows, skipped = appliance_equivalents(estimate, devices, ctx)
        assert skipped == []
        by_name = {r.name: r for r in rows}
        for device in devices:
            # row-by-row recomputation, spreadsheet style
            expected_kg = (
                device.power_w / 1000.0 * HOURS_PER_YEAR * device.utilization
                * ctx.pue * ctx.intensity.mean_g_per_kwh / 1000.0
            )
            row = by_name[device.name]
            assert row.annual_kg == pytest.approx(expected_kg, rel=1e-9)
            assert row.ratio == pytest.approx(
                estimate.emission.mean_kg / expected_kg, rel=1e-9
            )

    def test_empty_device_list(self):
        with pytest.raises(EmptyDeviceList):
            appliance_equivalents(annualize(1.0, 1.0, UNIT_CTX), [], UNIT_CTX)


class TestPowerComparisonRows:
    def test_records_only(self):
        rows = power_comparison_rows([record(), record(id="r2", avg_power_w=99.0)])
        assert all(r.kind == "model" for r in rows)
        assert [r.power_w for r in rows] == [142.05, 99.0]

    def test_ceiling_excludes_big_devices(self):
        rows = power_comparison_rows(
            [record()],
            [DeviceProfile("shower", 8750.0, 0.01), DeviceProfile("kettle", 1100.0, 0.01)],
            ceiling_w=1200.0,
        )
        names = [r.name for r in rows]
        assert "shower" not in names
        assert "kettle" in names

    def test_count_is_records_plus_devices_under_ceiling(self):
        records = [record(id=f"r{i}") for i in range(3)]
        devices = [
            DeviceProfile("a", 100.0, 0.1),
            DeviceProfile("b", 1300.0, 0.1),
            DeviceProfile("c", 1200.0, 0.1),
        ]
        rows = power_comparison_rows(records, devices, ceiling_w=1200.0)
        assert len(rows) == 3 + 2  # b excluded


class TestDeviceProfile:
    def test_annual_hours_interconvert(self):
        device = DeviceProfile("tv", 100.0, 0.25)
        assert device.annual_hours == 0.25 * 8760

    def test_from_annual_hours(self):
        device = DeviceProfile.from_annual_hours("tv", 100.0, 876.0)
        assert device.utilization == pytest.approx(0.1)

    def test_annual_hours_bounds(self):
        with pytest.raises(UtilizationOutOfRange):
            DeviceProfile.from_annual_hours("tv", 100.0, 9000.0)

    def test_devices_csv_round_trip(self, tmp_path):
        path = tmp_path / "devices.csv"
        path.write_text("name,power_w,utilization\nkettle,1100,0.005\n")
        devices = read_devices_csv(path)
        assert devices == [DeviceProfile("kettle", 1100.0, 0.005)]

    def test_devices_csv_bad_header(self, tmp_path):
        path = tmp_path / "devices.csv"
        path.write_text("nom,watts,use\n")
        with pytest.raises(EmptyDeviceList):
            read_devices_csv(path)


def test_records_are_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        record().kwh = 0.0
