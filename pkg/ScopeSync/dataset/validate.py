import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

from ..exceptions import ScopeSyncError
from .episode_io import read_episode
from .layout import DatasetIndex, INDEX_FILE, META_FILE, entry_mismatches, episode_path, on_disk_episodes


@dataclass
class DatasetValidationReport:
    """Everything wrong with a dataset root; clean when ``problems`` is empty."""
    root: str
    n_episodes: int = 0
    problems: List[dict] = field(default_factory=list)

    @property
    def ok(self):
        return not self.problems

    def add(self, message, episode=None, path=None, line=None):
        self.problems.append({'episode': episode, 'path': None if path is None else str(path),
                              'line': line, 'message': message})

    def to_dict(self):
        return {'root': self.root, 'ok': self.ok, 'n_episodes': self.n_episodes,
                'problems': list(self.problems)}


def _add_error(report, exc, episode=None):
    report.add(str(exc), episode=episode, path=getattr(exc, 'path', None), line=getattr(exc, 'line', None))


def validate_dataset(root):
    """
    Walk a dataset root: index schema and totals, every episode's files and
    invariants, index entries against each meta.json, frame files and digests. Never raises.
    Parameters
    ----------
    root : str or Path
    Returns
    -------
    DatasetValidationReport
    """
    root = Path(root)
    report = DatasetValidationReport(root=str(root))
    try:
        index = DatasetIndex.load(root)
        index.check()
    except ScopeSyncError as exc:
        _add_error(report, exc)
        index = None

    indexed = [] if index is None else index.ids()
    on_disk = on_disk_episodes(root)
    report.n_episodes = len(on_disk)
    for missing in sorted(set(indexed) - set(on_disk)):
        report.add('indexed episode missing on disk', episode=missing, path=root / INDEX_FILE)
    if index is not None:
        for extra in sorted(set(on_disk) - set(indexed)):
            report.add('episode on disk but not indexed', episode=extra, path=root / INDEX_FILE)

    for episode_id in on_disk:
        try:
            path = episode_path(root, episode_id)
            _, meta = read_episode(path)
        except (ScopeSyncError, OSError) as exc:
            _add_error(report, exc, episode=episode_id)
            continue
        entry = None if index is None else index.entry(episode_id)
        if entry is None:
            continue
        for key, indexed, stored in entry_mismatches(entry, meta):
            report.add(f'index {key} {indexed!r} differs from meta.json ({stored!r})', episode=episode_id,
                       path=path / META_FILE if key == 'meta_sha256' else root / INDEX_FILE)
    logging.info(f"Validated {report.n_episodes} episodes in {root}: {len(report.problems)} problems")
    return report
