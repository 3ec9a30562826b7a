from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..constants import Constants, Modality


@dataclass
class ValidationReport:
    """Findings of :func:`validate_channel`. Valid when nothing was found."""
    modality: str
    n_samples: int
    monotonicity: List[int] = field(default_factory=list)
    rate_deviation: Optional[Tuple[float, float]] = None
    sample_violations: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self):
        return not (self.monotonicity or self.rate_deviation or self.sample_violations)

    def to_dict(self):
        return {
            'modality': self.modality,
            'n_samples': self.n_samples,
            'monotonicity': list(self.monotonicity),
            'rate_deviation': None if self.rate_deviation is None else {
                'observed_hz': self.rate_deviation[0],
                'nominal_hz': self.rate_deviation[1]},
            'sample_violations': [{'index': i, 'message': m} for i, m in self.sample_violations],
            'ok': self.ok,
        }


def validate_channel(channel, rate_tolerance=Constants.RATE_TOLERANCE):
    """
    Check timestamp order, sampling rate and per-sample invariants.
    Parameters
    ----------
    channel : Channel
    rate_tolerance : float
        Allowed relative deviation of the mean interval from 1 / nominal_rate.
    Returns
    -------
    ValidationReport
    """
    report = ValidationReport(modality=channel.modality.value, n_samples=len(channel))
    if not channel.samples:
        return report

    stamps = channel.timestamps
    steps = np.diff(stamps)
    report.monotonicity = [int(i) + 1 for i in np.flatnonzero(steps <= 0)]

    if len(stamps) >= 2 and stamps[-1] > stamps[0]:
        mean_interval = (stamps[-1] - stamps[0]) / (len(stamps) - 1) / Constants.NS_PER_S
        expected = 1.0 / channel.nominal_rate
        if abs(mean_interval - expected) > rate_tolerance * expected:
            report.rate_deviation = (1.0 / mean_interval, channel.nominal_rate)

    for index, sample in enumerate(channel.samples):
        if sample.t < 0:
            report.sample_violations.append((index, f'negative timestamp {sample.t}'))
        if channel.modality is Modality.STATE:
            problems = sample.violations(channel.quantization_deg)
        else:
            problems = sample.violations()
        report.sample_violations.extend((index, problem) for problem in problems)
    return report
