import logging
import math
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from ..constants import Constants
from ..exceptions import UndefinedCorrelationError
from ..sync.lag import lag_window, signal_lag
from ..utils.pd_helper import histogram
from .episode_io import read_episode
from .layout import DatasetIndex, episode_path

LAG_COLUMNS = ['id', 'tau_star_samples', 'tau_star_ms', 'rho_max']


@dataclass
class DatasetLagReport:
    """Residual lag of one signal pair across a dataset."""
    pair: str
    tau_max_ms: float
    episodes: pd.DataFrame

    @property
    def n_episodes(self):
        return len(self.episodes)

    @property
    def defined(self):
        return self.episodes.dropna(subset=['tau_star_samples'])

    def median(self, column):
        values = self.defined[column]
        return None if values.empty else float(values.median())

    def tau_histogram(self):
        """Episodes per integer lag across the window, last bin open."""
        window = lag_window(self.tau_max_ms, Constants.ALIGNED_RATE_HZ)
        return histogram(self.defined['tau_star_samples'], list(range(-window, window + 1)),
                         name='tau_samples')

    def to_dict(self):
        return {'pair': self.pair,
                'n_episodes': self.n_episodes,
                'n_undefined': self.n_episodes - len(self.defined),
                'median_tau_samples': self.median('tau_star_samples'),
                'median_tau_ms': self.median('tau_star_ms'),
                'median_abs_tau_samples': None if self.defined.empty
                else float(self.defined['tau_star_samples'].abs().median())}


def dataset_lag(root, x, y, pair=None, tcfg=None, tau_max_ms=1000.0, min_overlap=10):
    """
    Residual lag between two aligned signals of every indexed episode.
    Parameters
    ----------
    root : str or Path
    x, y : Modality or str
        Reference and lagging signal.
    pair : str, optional
        Label of the report, ``x-y`` by default.
    tcfg : TransmissionConfig, optional
        Speed limit turning actions into a commanded trajectory.
    tau_max_ms : float
    min_overlap : int
    Returns
    -------
    DatasetLagReport
        Episodes whose correlation is undefined at every lag keep NaN lags.
    """
    root = Path(root)
    index = DatasetIndex.load(root)
    index.check()
    rows = []
    for episode_id in index.ids():
        ep, _ = read_episode(episode_path(root, episode_id))
        try:
            estimate = signal_lag(ep.signal(x, tcfg), ep.signal(y, tcfg), ep.rate_hz,
                                  tau_max_ms=tau_max_ms, min_overlap=min_overlap)
        except UndefinedCorrelationError as exc:
            logging.warning(f"{episode_id}: {exc}")
            rows.append({'id': episode_id, 'tau_star_samples': math.nan, 'tau_star_ms': math.nan,
                         'rho_max': math.nan})
            continue
        rows.append({'id': episode_id, 'tau_star_samples': estimate.tau_star_samples,
                     'tau_star_ms': estimate.tau_star_ms, 'rho_max': estimate.rho_max})
    episodes = pd.DataFrame(rows, columns=LAG_COLUMNS).astype({'tau_star_samples': float,
                                                               'tau_star_ms': float, 'rho_max': float})
    label = pair or f"{getattr(x, 'value', x)}-{getattr(y, 'value', y)}"
    report = DatasetLagReport(pair=label, tau_max_ms=float(tau_max_ms), episodes=episodes)
    logging.info(f"{label} lag over {report.n_episodes} episodes: median {report.median('tau_star_ms')} ms")
    return report
