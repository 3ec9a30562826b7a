"""
Dataset directory layout::

    root/
      index.json
      .lock                    (present while a writer is active)
      episodes/<episode_id>/
        meta.json
        records.csv
        frames/000000.pgm ...
"""
import json
import logging
import os
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

from ..constants import Constants
from ..exceptions import ConflictError, ConsistencyError, FormatError, InvalidArgumentError
from ..sync.calibrate import OffsetCalibration
from ..utils.path import atomic_write_text, sha256_bytes
from .tasks import TaskLabel

INDEX_FILE = 'index.json'
LOCK_FILE = '.lock'
EPISODES_DIR = 'episodes'
META_FILE = 'meta.json'
RECORDS_FILE = 'records.csv'
FRAMES_DIR = 'frames'
TMP_PREFIX = '.tmp-'

_EPISODE_ID = re.compile(r'^[A-Za-z0-9_][A-Za-z0-9_.-]*$')


def check_episode_id(episode_id):
    if not isinstance(episode_id, str) or not _EPISODE_ID.match(episode_id):
        raise InvalidArgumentError(
            f'episode id {episode_id!r} must be letters, digits, "_", "." or "-"')
    return episode_id


def episodes_root(root):
    return Path(root) / EPISODES_DIR


def episode_path(root, episode_id):
    return episodes_root(root) / check_episode_id(episode_id)


def dump_json(data):
    return json.dumps(data, indent=2, sort_keys=True) + '\n'


def load_json(path):
    try:
        with open(path, 'r') as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise FormatError('missing file', path=path) from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f'invalid JSON: {exc.msg}', path=path, line=exc.lineno) from exc


@contextmanager
def dataset_lock(root):
    """Advisory single-writer lock on a dataset root."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    lock = root / LOCK_FILE
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConflictError(f'{lock} exists: another writer holds the dataset') from None
    try:
        os.write(fd, str(os.getpid()).encode('ascii'))
        os.close(fd)
        yield lock
    finally:
        lock.unlink()


@dataclass(frozen=True)
class EpisodeMeta:
    """
    Per-episode metadata, stored as ``meta.json``.
    Attributes
    ----------
    episode_id : str
    task : TaskLabel
    instruction : str
        Natural-language instruction, fixed for the whole episode.
    duration_s : float
        Last minus first record timestamp.
    n_frames : int
    trajectory_length_m : float
        Tip path length.
    rate_hz : float
    calibration : OffsetCalibration
    records_sha256 : str
        Digest of ``records.csv``; empty until written.
    frames_sha256 : str
        Digest of every frame file, concatenated in record order; empty until written.
    frame_shape : tuple
        (height, width) of every frame.
    """
    episode_id: str
    task: TaskLabel
    instruction: str
    duration_s: float
    n_frames: int
    trajectory_length_m: float
    calibration: OffsetCalibration
    rate_hz: float = Constants.ALIGNED_RATE_HZ
    records_sha256: str = ''
    frames_sha256: str = ''
    frame_shape: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        check_episode_id(self.episode_id)
        object.__setattr__(self, 'task', TaskLabel.parse(self.task))
        if not isinstance(self.instruction, str) or not self.instruction:
            raise InvalidArgumentError('instruction must be a non-empty string')

    def to_dict(self):
        return {
            'format_version': Constants.FORMAT_VERSION,
            'episode_id': self.episode_id,
            'task_id': self.task.value,
            'task': self.task.label,
            'instruction': self.instruction,
            'duration_s': float(self.duration_s),
            'n_frames': int(self.n_frames),
            'trajectory_length_m': float(self.trajectory_length_m),
            'rate_hz': float(self.rate_hz),
            'calibration': self.calibration.to_dict(),
            'records_sha256': self.records_sha256,
            'frames_sha256': self.frames_sha256,
            'frame_height': int(self.frame_shape[0]),
            'frame_width': int(self.frame_shape[1]),
        }

    @classmethod
    def from_dict(cls, data, path=None):
        try:
            if str(data['format_version']) != Constants.FORMAT_VERSION:
                raise FormatError(f"unsupported format_version {data['format_version']!r}", path=path)
            return cls(episode_id=data['episode_id'], task=data['task_id'],
                       instruction=data['instruction'], duration_s=float(data['duration_s']),
                       n_frames=int(data['n_frames']),
                       trajectory_length_m=float(data['trajectory_length_m']),
                       calibration=OffsetCalibration.from_dict(data['calibration'], path=path),
                       rate_hz=float(data['rate_hz']), records_sha256=str(data['records_sha256']),
                       frames_sha256=str(data['frames_sha256']),
                       frame_shape=(int(data['frame_height']), int(data['frame_width'])))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f'bad episode metadata ({exc!r})', path=path) from exc

    def index_entry(self, meta_sha256):
        return {'id': self.episode_id, 'task_id': self.task.value, 'n_frames': int(self.n_frames),
                'duration_s': float(self.duration_s),
                'trajectory_length_m': float(self.trajectory_length_m),
                'meta_sha256': meta_sha256}


def zero_task_counts():
    return {task.label: 0 for task in TaskLabel}


@dataclass
class DatasetIndex:
    """``index.json``: one entry per episode and per-task totals."""
    episodes: List[dict] = field(default_factory=list)
    task_counts: Dict[str, int] = field(default_factory=zero_task_counts)
    format_version: str = Constants.FORMAT_VERSION

    def ids(self):
        return [entry['id'] for entry in self.episodes]

    def entry(self, episode_id):
        for entry in self.episodes:
            if entry['id'] == episode_id:
                return entry
        return None

    def counted_tasks(self):
        counts = zero_task_counts()
        for entry in self.episodes:
            counts[TaskLabel.parse(entry['task_id']).label] += 1
        return counts

    def add(self, entry):
        if self.entry(entry['id']) is not None:
            raise ConflictError(f"episode {entry['id']!r} is already indexed")
        self.episodes.append(entry)
        self.task_counts = self.counted_tasks()

    def check(self):
        """Raise ConsistencyError when the totals disagree with the entries."""
        ids = self.ids()
        if len(set(ids)) != len(ids):
            raise ConsistencyError('index lists an episode more than once')
        counted = self.counted_tasks()
        if counted != {**zero_task_counts(), **self.task_counts}:
            raise ConsistencyError(f'index task_counts {self.task_counts} differ from entries {counted}')

    def to_dict(self):
        return {'format_version': self.format_version, 'episodes': list(self.episodes),
                'task_counts': dict(self.task_counts)}

    @classmethod
    def load(cls, root):
        """The index of ``root``; an absent index is an empty dataset."""
        path = Path(root) / INDEX_FILE
        if not path.exists():
            return cls()
        data = load_json(path)
        try:
            if str(data['format_version']) != Constants.FORMAT_VERSION:
                raise FormatError(f"unsupported format_version {data['format_version']!r}", path=path)
            episodes = [dict(e) for e in data['episodes']]
            for e in episodes:
                TaskLabel.parse(e['task_id'])
                absent = {'id', 'n_frames', 'duration_s', 'trajectory_length_m'} - set(e)
                if absent:
                    raise KeyError(sorted(absent))
            return cls(episodes=episodes, task_counts={str(k): int(v) for k, v in data['task_counts'].items()},
                       format_version=str(data['format_version']))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f'bad dataset index ({exc!r})', path=path) from exc

    def save(self, root):
        atomic_write_text(Path(root) / INDEX_FILE, dump_json(self.to_dict()))
        logging.debug(f"Index of {root} now lists {len(self.episodes)} episodes")


def meta_digest(meta):
    return sha256_bytes(dump_json(meta.to_dict()).encode('utf-8'))


def entry_mismatches(entry, meta):
    """
    Fields of an index entry that disagree with the episode's ``meta.json``.
    Returns
    -------
    list of tuple
        ``(field, indexed value, meta value)``, empty when they agree.
    """
    expected = meta.index_entry(meta_digest(meta))
    return [(key, entry.get(key), value) for key, value in expected.items() if entry.get(key) != value]


def on_disk_episodes(root):
    """Episode directory names, temporary write directories excluded."""
    base = episodes_root(root)
    if not base.is_dir():
        return []
    return sorted(p.name for p in base.iterdir() if p.is_dir() and not p.name.startswith(TMP_PREFIX))
