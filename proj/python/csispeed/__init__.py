"""Walking speed, gait and fall detection from Wi-Fi channel state information."""

from ._core import (
    AcfBlock,
    AcfConfig,
    AccelSeries,
    CsiSpeedError,
    FallConfig,
    FallEvent,
    GaitConfig,
    GaitReport,
    Peak,
    PeakFinderConfig,
    PowerResponse,
    RadioConfig,
    SpeedConfig,
    SpeedSeries,
    TrendFilterConfig,
    acceleration,
    acf_axis_longitudinal,
    acf_axis_transverse,
    acf_block,
    acf_field,
    detect_falls,
    estimate_speed,
    f_quantile,
    fill_gaps,
    find_peaks,
    first_peak,
    first_peak_distance,
    gait_cycles,
    integrate_distance,
    l1_trend,
    load_power,
    median_filter,
    sample_autocov,
    simulate,
    simulate_profile,
    simulate_trace,
    speed_from_lag,
    trend_lambda_max,
    trend_objective,
)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
