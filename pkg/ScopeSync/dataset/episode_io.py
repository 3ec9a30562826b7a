import logging
import os
import shutil
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..constants import Constants
from ..exceptions import ConflictError, FormatError, InvalidArgumentError
from ..sync.align import AlignedEpisode, frame_ref
from ..utils.path import sha256_bytes, sha256_chunks, str_is_path
from ..utils.pd_helper import parse_column, read_exact_csv, to_exact_csv
from .layout import (DatasetIndex, EpisodeMeta, FRAMES_DIR, META_FILE, RECORDS_FILE, TMP_PREFIX,
                     dataset_lock, dump_json, episode_path, episodes_root, load_json, meta_digest)
from .pgm import read_pgm, write_pgm
from .stats import episode_stats
from .tasks import TaskLabel

_INT_COLUMNS = ('frame_index', 't_ns', 'action_home')


def episode_problems(ep):
    """Invariant violations of an aligned episode, as ``(row, message)`` pairs."""
    problems = []
    if len(ep) == 0:
        return [(None, 'episode has no records')]
    steps = np.diff(ep.t_ns)
    problems += [(int(i) + 1, 'timestamp not increasing') for i in np.flatnonzero(steps <= 0)]
    if ep.t_ns[0] < 0:
        problems.append((0, 'negative timestamp'))
    for name in ('action', 'state', 'position', 'orientation'):
        bad = ~np.all(np.isfinite(getattr(ep, name)), axis=1)
        problems += [(int(i), f'non-finite {name}') for i in np.flatnonzero(bad)]
    out_of_range = np.any(np.abs(ep.action[:, :3]) > 1.0, axis=1)
    problems += [(int(i), 'action outside [-1, 1]') for i in np.flatnonzero(out_of_range)]
    bad_home = ~np.isin(ep.action[:, 3], (0.0, 1.0))
    problems += [(int(i), 'home flag is not 0 or 1') for i in np.flatnonzero(bad_home)]
    norms = np.linalg.norm(ep.orientation, axis=1)
    off_unit = np.abs(norms - 1.0) > Constants.QUAT_INPUT_TOLERANCE
    problems += [(int(i), f'quaternion norm {norms[i]!r}') for i in np.flatnonzero(off_unit)]
    shape = np.shape(ep.frames[0])
    for i, pixels in enumerate(ep.frames):
        pixels = np.asarray(pixels)
        if pixels.ndim != 2 or pixels.dtype != np.uint8 or pixels.shape != shape:
            problems.append((i, f'frame is {pixels.dtype} {pixels.shape}, expected uint8 {shape}'))
    return problems


def make_meta(ep, episode_id, task, instruction=None):
    """EpisodeMeta with duration and trajectory length computed from ``ep``."""
    task = TaskLabel.parse(task)
    stats = episode_stats(ep)
    return EpisodeMeta(episode_id=episode_id, task=task,
                       instruction=instruction or task.default_instruction,
                       duration_s=stats['duration_s'], n_frames=len(ep),
                       trajectory_length_m=stats['trajectory_length_m'],
                       calibration=ep.calibration, rate_hz=ep.rate_hz)


def write_episode(ep, meta, root):
    """
    Write one aligned episode under ``root/episodes/<episode_id>`` and index it.
    Parameters
    ----------
    ep : AlignedEpisode
    meta : EpisodeMeta
        ``n_frames`` must match ``ep``; digests and frame shape are filled in here.
    root : str or Path
    Returns
    -------
    Path
        The episode directory.
    Raises
    ------
    InvalidArgumentError
        Empty or invalid episode.
    ConflictError
        The id exists already or another writer holds the dataset.
    Notes
    -----
    Files go to a temporary directory renamed into place; the index is
    replaced atomically last, so a failed write leaves no index entry.
    """
    problems = episode_problems(ep)
    if problems:
        row, message = problems[0]
        raise InvalidArgumentError(f'invalid episode: {message}' + ('' if row is None else f' at record {row}'))
    if meta.n_frames != len(ep):
        raise InvalidArgumentError(f'meta says {meta.n_frames} frames, episode has {len(ep)}')

    root = Path(root)
    with dataset_lock(root):
        index = DatasetIndex.load(root)
        index.check()
        final = episode_path(root, meta.episode_id)
        if meta.episode_id in index.ids() or final.exists():
            raise ConflictError(f'episode {meta.episode_id!r} already exists in {root}')
        tmp = episodes_root(root) / f'{TMP_PREFIX}{meta.episode_id}'
        if tmp.exists():
            shutil.rmtree(tmp)
        try:
            (tmp / FRAMES_DIR).mkdir(parents=True)
            frame_files = [write_pgm(tmp / frame_ref(i), pixels) for i, pixels in enumerate(ep.frames)]
            records = to_exact_csv(ep.to_frame()).encode('utf-8')
            with open(tmp / RECORDS_FILE, 'wb') as handle:
                handle.write(records)
            meta = replace(meta, records_sha256=sha256_bytes(records),
                           frames_sha256=sha256_chunks(frame_files),
                           frame_shape=tuple(int(n) for n in np.shape(ep.frames[0])))
            with open(tmp / META_FILE, 'w') as handle:
                handle.write(dump_json(meta.to_dict()))
            os.rename(tmp, final)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        index.add(meta.index_entry(meta_digest(meta)))
        index.save(root)
    logging.info(f"Wrote episode {meta.episode_id} ({len(ep)} records, task {meta.task.label}) to {final}")
    return final


def _read_records(path):
    df = read_exact_csv(path, Constants.RECORD_COLUMNS)
    columns = {c: parse_column(df, c, int if c in _INT_COLUMNS else float, path=path)
               for c in Constants.RECORD_COLUMNS[:-1]}
    refs = df['frame_ref'].tolist()

    index = columns['frame_index']
    bad = np.flatnonzero(index != np.arange(len(index)))
    if len(bad):
        raise FormatError(f'frame_index {index[bad[0]]} where {bad[0]} was expected',
                          path=path, line=int(bad[0]) + 2)
    for i, ref in enumerate(refs):
        if str_is_path(ref) or ref != frame_ref(i):
            raise FormatError(f'frame_ref {ref!r}, expected {frame_ref(i)!r}', path=path, line=i + 2)
    steps = np.diff(columns['t_ns'])
    if np.any(steps <= 0):
        row = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise FormatError('t_ns not strictly increasing', path=path, line=row + 2)
    quats = np.column_stack([columns[c] for c in Constants.RECORD_COLUMNS[12:16]]) if len(df) else np.empty((0, 4))
    norms = np.linalg.norm(quats, axis=1)
    off = np.flatnonzero(np.abs(norms - 1.0) > Constants.QUAT_INPUT_TOLERANCE)
    if len(off):
        raise FormatError(f'quaternion norm {norms[off[0]]!r} is not unit', path=path, line=int(off[0]) + 2)
    actions = np.column_stack([columns[c] for c in Constants.RECORD_COLUMNS[2:5]]) if len(df) else np.empty((0, 3))
    wild = np.flatnonzero(np.any(np.abs(actions) > 1.0, axis=1) | ~np.isin(columns['action_home'], (0, 1)))
    if len(wild):
        raise FormatError('action outside [-1, 1] or home not 0/1', path=path, line=int(wild[0]) + 2)
    df = df.copy()
    for column, values in columns.items():
        df[column] = values
    return df


def read_episode(path):
    """
    Read and fully validate one episode directory.
    Parameters
    ----------
    path : str or Path
        ``root/episodes/<episode_id>``.
    Returns
    -------
    tuple
        (AlignedEpisode, EpisodeMeta)
    Raises
    ------
    FormatError
        Names the offending file and, for records, the 1-based line.
    """
    path = Path(path)
    meta_file = path / META_FILE
    meta = EpisodeMeta.from_dict(load_json(meta_file), path=meta_file)
    if meta.episode_id != path.name:
        raise FormatError(f'episode_id {meta.episode_id!r} does not match the directory', path=meta_file)

    records_file = path / RECORDS_FILE
    if not records_file.exists():
        raise FormatError('missing file', path=records_file)
    df = _read_records(records_file)
    if len(df) != meta.n_frames:
        raise FormatError(f'{len(df)} records, meta says {meta.n_frames}', path=records_file,
                          line=len(df) + 1)
    with open(records_file, 'rb') as handle:
        if sha256_bytes(handle.read()) != meta.records_sha256:
            raise FormatError('checksum mismatch', path=records_file)

    frames, frame_files = [], []
    for ref in df['frame_ref']:
        pixels, data = read_pgm(path / ref, shape=meta.frame_shape)
        frames.append(pixels)
        frame_files.append(data)
    if sha256_chunks(frame_files) != meta.frames_sha256:
        raise FormatError('frame checksum mismatch', path=path / FRAMES_DIR)
    ep = AlignedEpisode.from_frame(df, frames, meta.calibration)
    if len(ep) >= 2:
        expected = (len(ep) - 1) / meta.rate_hz
        if abs(meta.duration_s - expected) > 1.0 / meta.rate_hz:
            logging.warning(f"{path.name}: duration {meta.duration_s:.3f} s differs from "
                            f"{len(ep)} frames at {meta.rate_hz:g} Hz by more than a frame period")
    return ep, meta
