"""Heart- and respiration-rate estimation from thermal frame sequences.

Pipeline: track an ROI with a kernelized correlation filter, turn the pixel
intensities under it into time series, band-pass and zero-pad them, and pick
the dominant in-band frequency, either of the ROI average (method 1) or by
per-pixel vote (method 2). Estimates are scored with MAPE and Bland-Altman
statistics.
"""

from .dsp import (
    HR_BAND,
    RR_BAND,
    FrequencyBand,
    Spectrum,
    TimeSeries,
    bandpass,
    dominant_frequency,
    fft_magnitude,
    nyquist_check,
    zero_pad,
)
from .estimator import (
    EstimatorConfig,
    SignalBuffer,
    VitalEstimate,
    estimate_method1,
    estimate_method2,
    hz_to_rate,
)
from .evaluation import EvaluationReport, bland_altman, build_report, mape, sample_segments
from .ingest import (
    FrameSequence,
    Motion,
    Region,
    SyntheticSpec,
    ThermalFrame,
    generate_synthetic,
    read_sequence,
    write_sequence,
)
from .tracker import KcfParams, RoiBox, Track, extract_pixel_series, init_track, track_sequence

__version__ = "0.1.0"
