"""SP 800-22 statistical battery."""

from .battery import (
    BatteryParams,
    BatteryReport,
    run_battery,
    write_report_csv,
    write_report_json,
)
from .kernels import berlekamp_massey, gf2_rank, linear_complexity_blocks
from .special import erfc, igamc
from .suite import (
    ALPHA,
    ROW_NAMES,
    TestResult,
    combine_pvalues,
    test_apen,
    test_block_frequency,
    test_cusum,
    test_dft,
    test_frequency,
    test_linear_complexity,
    test_longest_run,
    test_matrix_rank,
    test_nonoverlapping_template,
    test_overlapping_template,
    test_random_excursions,
    test_random_excursions_variant,
    test_runs,
    test_serial,
    test_universal,
)

__all__ = [
    "ALPHA", "ROW_NAMES", "BatteryParams", "BatteryReport", "TestResult",
    "berlekamp_massey", "combine_pvalues", "erfc", "gf2_rank", "igamc",
    "linear_complexity_blocks", "run_battery", "test_apen", "test_block_frequency",
    "test_cusum", "test_dft", "test_frequency", "test_linear_complexity",
    "test_longest_run", "test_matrix_rank", "test_nonoverlapping_template",
    "test_overlapping_template", "test_random_excursions",
    "test_random_excursions_variant", "test_runs", "test_serial",
    "test_universal", "write_report_csv", "write_report_json",
]
