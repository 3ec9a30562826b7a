import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..config import config
from ..constants import Constants
from ..exceptions import ConsistencyError
from ..utils.pd_helper import histogram
from .layout import (DatasetIndex, EpisodeMeta, META_FILE, entry_mismatches, episode_path, load_json,
                     on_disk_episodes)
from .tasks import TaskLabel

ACTIVITY_THRESHOLD = float(config['dataset']['activity_threshold'])
DURATION_BINS_S = [float(e) for e in config['dataset']['duration_bins_s']]
TRAJECTORY_BINS_M = [float(e) for e in config['dataset']['trajectory_bins_m']]
AXES = ('bend_x', 'bend_y', 'insertion')


def trajectory_length(positions):
    """Sum of consecutive tip displacements, metres."""
    positions = np.asarray(positions, dtype=float)
    if len(positions) < 2:
        return 0.0
    return math.fsum(np.linalg.norm(np.diff(positions, axis=0), axis=1))


def episode_stats(ep, activity_threshold=ACTIVITY_THRESHOLD):
    """
    Episode-level characteristics.
    Parameters
    ----------
    ep : AlignedEpisode
    activity_threshold : float
        Dead zone on the normalized action components.
    Returns
    -------
    dict
        ``duration_s``, ``trajectory_length_m`` and ``activity`` (fraction of
        records with ``|component| > activity_threshold`` per action axis).
    """
    n = len(ep)
    duration = 0.0 if n == 0 else (int(ep.t_ns[-1]) - int(ep.t_ns[0])) / Constants.NS_PER_S
    activity = {axis: 0.0 if n == 0 else float(np.mean(np.abs(ep.action[:, i]) > activity_threshold))
                for i, axis in enumerate(AXES)}
    return {'duration_s': duration, 'trajectory_length_m': trajectory_length(ep.position),
            'activity': activity}


@dataclass
class DatasetReport:
    """Aggregate statistics of a dataset root."""
    episodes: pd.DataFrame
    task_counts: pd.Series
    duration_histogram: pd.DataFrame
    trajectory_histogram: pd.DataFrame

    @property
    def n_episodes(self):
        return len(self.episodes)

    @property
    def total_duration_s(self):
        return math.fsum(self.episodes['duration_s'])

    @property
    def total_hours(self):
        return self.total_duration_s / 3600.0

    @property
    def total_trajectory_length_m(self):
        return math.fsum(self.episodes['trajectory_length_m'])

    def task_frame(self):
        return pd.DataFrame({'task_id': [TaskLabel[name.upper()].value for name in self.task_counts.index],
                             'task': self.task_counts.index,
                             'episodes': self.task_counts.to_numpy(dtype=np.int64)})

    def to_dict(self):
        return {'n_episodes': self.n_episodes,
                'total_hours': self.total_hours,
                'total_duration_s': self.total_duration_s,
                'total_trajectory_length_m': self.total_trajectory_length_m,
                'task_counts': {k: int(v) for k, v in self.task_counts.items()}}


def _verify(root, index):
    indexed = set(index.ids())
    on_disk = set(on_disk_episodes(root))
    if indexed - on_disk:
        raise ConsistencyError(f'indexed episodes missing on disk: {sorted(indexed - on_disk)}')
    if on_disk - indexed:
        raise ConsistencyError(f'episodes on disk but not indexed: {sorted(on_disk - indexed)}')
    for entry in index.episodes:
        path = episode_path(root, entry['id']) / META_FILE
        meta = EpisodeMeta.from_dict(load_json(path), path=path)
        mismatches = entry_mismatches(entry, meta)
        if mismatches:
            key, listed, stored = mismatches[0]
            raise ConsistencyError(f"index {key} {listed!r} of {entry['id']} differs from {path} ({stored!r})")


def dataset_stats(root, duration_bins=None, trajectory_bins=None, verify_episodes=True):
    """
    Per-task counts, duration and trajectory-length histograms, totals.
    Parameters
    ----------
    root : str or Path
    duration_bins, trajectory_bins : list, optional
        Histogram edges; defaults 0-180 s by 15 s and 0-0.5 m by 0.05 m,
        last bin open.
    verify_episodes : bool
        Check every index entry against the episode on disk. Off for
        metadata-only indexes.
    Returns
    -------
    DatasetReport
    Raises
    ------
    ConsistencyError
        The index and the episodes disagree.
    """
    index = DatasetIndex.load(root)
    index.check()
    if verify_episodes:
        _verify(root, index)

    episodes = pd.DataFrame(index.episodes,
                            columns=['id', 'task_id', 'n_frames', 'duration_s', 'trajectory_length_m'])
    episodes = episodes.astype({'task_id': np.int64, 'n_frames': np.int64,
                                'duration_s': float, 'trajectory_length_m': float})
    episodes['task'] = [TaskLabel(int(t)).label for t in episodes['task_id']]
    task_counts = episodes['task'].value_counts().reindex([t.label for t in TaskLabel], fill_value=0)
    task_counts = task_counts.astype(np.int64)
    report = DatasetReport(
        episodes=episodes,
        task_counts=task_counts,
        duration_histogram=histogram(episodes['duration_s'], duration_bins or DURATION_BINS_S,
                                     name='duration_s'),
        trajectory_histogram=histogram(episodes['trajectory_length_m'], trajectory_bins or TRAJECTORY_BINS_M,
                                       name='trajectory_length_m'))
    logging.info(f"{report.n_episodes} episodes, {report.total_hours:.3f} h")
    return report
