import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from adaptrng.bits import BitStream
from adaptrng.entropy import LfsrSource
from adaptrng.errors import ConfigError, InputFormatError
from adaptrng.harness import (
    PipelineConfig,
    RunOutcome,
    SweepSpec,
    bias_curve,
    black_fraction,
    calibrate_fixed_reference,
    compare_fixed_vs_adaptive,
    emit_bitmap,
    evaluate_run,
    find_resilience_range,
    lfsr_raw_stream,
    raw_bits,
    repeated_run_study,
    run_pipeline,
    sampled_voltages,
    write_pass_rate_csv,
    write_sweep_csv,
    write_sweep_json,
)
from adaptrng.nist import ROW_NAMES

BASE = PipelineConfig()


# Stubs live at module level so that worker processes can unpickle them.

def always_pass(cfg, n_bits):
    return True


def always_fail(cfg, n_bits):
    return False


def vdd_window(cfg, n_bits):
    """Passes for 4.0 <= vdd <= 6.5, except seed 2 at exactly 6.5."""
    ok = 4.0 <= cfg.vdd <= 6.5
    if cfg.vdd == 6.5 and cfg.seed == 2:
        ok = False
    return RunOutcome(cfg.seed, ok, 0.5)


def spec(parameter="vdd", **kw):
    return SweepSpec.default(parameter, **kw)


# --- sweeps with stub evaluators ------------------------------------------------

def test_stub_pass_reaches_max_steps_each_way():
    r = find_resilience_range(spec(), BASE, evaluate=always_pass)
    assert (r.lower, r.upper) == (3.0, 7.0)
    assert [p.value for p in r.points] == [3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0]
    assert r.width == pytest.approx(4.0)


def test_stub_max_steps_two_records_five_points():
    r = find_resilience_range(spec(max_steps=2), BASE, evaluate=always_pass)
    assert (r.lower, r.upper) == (4.0, 6.0) and len(r.points) == 5


def test_stub_fail_gives_empty_range_with_reason():
    r = find_resilience_range(spec(), BASE, evaluate=always_fail)
    assert r.empty and r.width == 0.0 and r.passing_points() == []
    assert "nominal" in r.diagnostic and len(r.points) == 1


def test_search_stops_at_first_failing_point_and_seed():
    r = find_resilience_range(spec(), BASE, evaluate=vdd_window)
    assert (r.lower, r.upper) == (4.0, 6.0)
    values = [p.value for p in r.points]
    assert values == [3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5]
    failing = r.points[-1]
    assert not failing.passed and [run.seed for run in failing.runs] == [1, 2]
    # every point strictly inside the range passed all seeds
    assert all(p.passed and len(p.runs) == 3 for p in r.passing_points())


def test_g0_and_tmr_grid_and_bounds():
    r = find_resilience_range(spec("g0"), BASE, evaluate=always_pass)
    assert [p.value for p in r.points] == [6e-4, 7e-4, 8e-4, 9e-4, 1e-3, 1.1e-3, 1.2e-3, 1.3e-3, 1.4e-3]
    r = find_resilience_range(spec("tmr", nominal=0.2, step=0.1), BASE, evaluate=always_pass)
    assert r.lower == 0.0  # TMR may reach zero but not below
    assert min(p.value for p in r.points) == 0.0


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec.default("temperature")
    with pytest.raises(ConfigError):
        spec(bits_per_point=1000)
    with pytest.raises(ConfigError):
        spec(seeds_per_point=0)
    with pytest.raises(ConfigError):
        SweepSpec("vdd", -1.0, 0.5, 0.5)


def test_identical_arms_have_zero_enhancement():
    rep = compare_fixed_vs_adaptive(spec(), BASE, evaluate=always_pass, v_ref=2.5)
    assert rep.enhancement == 0.0
    assert rep.adaptive_contains_fixed and not rep.strictly_wider


def test_enhancement_undefined_for_zero_width_fixed_range():
    def by_mode(cfg, n):
        return cfg.mode == "adaptive" or cfg.vdd == 5.0
    rep = compare_fixed_vs_adaptive(spec(), BASE, evaluate=by_mode, v_ref=2.5)
    assert rep.fixed_range.width == 0.0 and rep.enhancement is None
    assert rep.strictly_wider and rep.adaptive_contains_fixed


def test_parallel_points_match_serial():
    one = find_resilience_range(spec(), BASE, evaluate=vdd_window, jobs=1)
    two = find_resilience_range(spec(), BASE, evaluate=vdd_window, jobs=3)
    assert one == two


def test_sweep_artifacts(tmp_path):
    rep = compare_fixed_vs_adaptive(spec(max_steps=1), BASE, evaluate=always_pass, v_ref=2.5)
    write_sweep_csv(tmp_path / "s.csv", [rep])
    write_sweep_json(tmp_path / "s.json", [rep])
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert len(rows) == 2 * 3 * 3  # arms x points x seeds
    assert {r["arm"] for r in rows} == {"fixed", "adaptive"}
    data = json.loads((tmp_path / "s.json").read_text())
    assert data[0]["enhancement"] == 0.0 and data[0]["v_ref_fixed"] == 2.5


def test_sweep_is_deterministic():
    a = compare_fixed_vs_adaptive(spec(), BASE, evaluate=vdd_window, v_ref=2.5)
    b = compare_fixed_vs_adaptive(spec(), BASE, evaluate=vdd_window, v_ref=2.5)
    assert a == b and a.to_dict() == b.to_dict()


# --- real pipeline pieces ----------------------------------------------------------

def test_pipeline_is_reproducible_per_seed():
    a = run_pipeline(BASE, 4096)
    b = run_pipeline(BASE, 4096)
    c = run_pipeline(replace(BASE, seed=2), 4096)
    assert a == b and a.output != c.output
    assert len(a.output) == 4096 and len(a.raw) == 4096 + 160


def test_mini_pipeline_lengths():
    r = run_pipeline(replace(BASE, cipher="mini"), 1000)
    assert len(r.raw) == 1019 and len(r.output) == 1000
    assert run_pipeline(replace(BASE, cipher="none"), 500).output == raw_bits(BASE, 500)


def test_degenerate_raw_stream_is_a_failing_run():
    cfg = replace(BASE, cipher="mini", mode="fixed", v_ref_fixed=5.0)
    out = evaluate_run(cfg, 10_000)
    assert not out.passed and out.ones_fraction == 0.0
    assert "seed" in out.diagnostic


def test_calibration_centres_fixed_reference():
    cfg = replace(BASE, mode="fixed")
    v = calibrate_fixed_reference(cfg, 1 << 18)
    volts = sampled_voltages(cfg, 1 << 18)
    assert abs(np.mean(volts > v) - 0.5) <= 0.001
    assert v == pytest.approx(2.5, abs=0.05)


def test_adaptive_bias_curve_and_empty_list():
    assert bias_curve("vdd", [], BASE) == []
    curve = bias_curve("vdd", [3.0, 6.0], BASE, n_bits=1 << 17)
    assert [v for v, _ in curve] == [3.0, 6.0]
    assert all(abs(f - 0.5) <= 0.01 for _, f in curve)


def test_fixed_bias_moves_with_supply():
    cfg = replace(BASE, mode="fixed", v_ref_fixed=2.5)
    (_, low), (_, high) = bias_curve("vdd", [4.0, 6.0], cfg, n_bits=1 << 16)
    assert low < 0.45 and high > 0.55


def test_lfsr_source_pipeline():
    cfg = PipelineConfig(source="lfsr", cipher="mini")
    raw = lfsr_raw_stream(cfg, 1000)
    assert raw == BitStream(LfsrSource(state=cfg.lfsr_seed_state()).bits(1000))
    assert 1 <= cfg.lfsr_seed_state() < 1 << 16
    assert cfg.lfsr_seed_state() != replace(cfg, seed=2).lfsr_seed_state()
    assert len(run_pipeline(cfg, 2000).output) == 2000


@pytest.mark.parametrize("field, value", [
    ("source", "laser"), ("cipher", "aes"), ("readout", "magic"), ("vdd", 0.0),
    ("tau_lpf", 50e-9), ("dac_bits", 20),
])
def test_invalid_configs_rejected(field, value):
    cfg = replace(BASE, **{field: value})
    if field == "dac_bits":
        cfg = replace(cfg, source="lfsr")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_with_value_rejects_unknown_parameter():
    with pytest.raises(ConfigError):
        BASE.with_value("temperature", 300)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_repeat_single_run_is_one_report():
    table = repeated_run_study(BASE, runs=1, n_bits=50_000)
    assert table.runs == 1 and len(table.reports) == 1
    assert [r.test_name for r in table.rows] == list(ROW_NAMES)
    assert all(r.pass_rate in ("0/1", "1/1", "0/0") for r in table.rows)
    with pytest.raises(ConfigError):
        repeated_run_study(BASE, runs=0)
    with pytest.raises(ConfigError):
        repeated_run_study(BASE, runs=1, stream="lfsr")


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_repeat_table_csv(tmp_path):
    table = repeated_run_study(BASE, runs=2, n_bits=50_000, stream="raw")
    write_pass_rate_csv(tmp_path / "p.csv", table)
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["test_name", "mean_p_value", "result", "pass_rate"]
    assert len(rows) == 17


# --- bitmaps ----------------------------------------------------------------------

def test_bitmap_layout():
    assert emit_bitmap(BitStream.from_string("1010"), 2) == "P1\n2 2\n1 0\n1 0\n"


def test_bitmap_drops_partial_row():
    text = emit_bitmap(BitStream.from_string("1" * 10), 4)
    assert text.splitlines()[1] == "4 2" and len(text.splitlines()) == 4


def test_bitmap_errors():
    with pytest.raises(InputFormatError):
        emit_bitmap(BitStream.from_string("101"), 4)
    with pytest.raises(ConfigError):
        emit_bitmap(BitStream.from_string("101"), 0)


def test_pipeline_bitmap_is_balanced():
    bits = run_pipeline(BASE, 1 << 16).output
    assert abs(black_fraction(bits, 256) - 0.5) <= 0.02
    assert emit_bitmap(bits, 256).splitlines()[1] == "256 256"
