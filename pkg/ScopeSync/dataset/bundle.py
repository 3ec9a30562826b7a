"""
Raw (unaligned) stream bundles as written by ``scopesync simulate``::

    bundle/
      bundle.json          rates, quantization, duration, seed, profile
      ground_truth.json    injected latencies and the calibration they imply
      action.csv  state.csv  pose.csv  frames.csv
      frames/000000.pgm ...
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..constants import Constants, Modality
from ..core.types import ActionSample, Channel, FrameSample, PoseSample, StateSample
from ..exceptions import FormatError
from ..scopesim.streams import StreamBundle
from ..sync.align import frame_ref
from ..sync.calibrate import OffsetCalibration
from ..utils.pd_helper import parse_column, read_exact_csv, to_exact_csv
from .layout import FRAMES_DIR, dump_json, load_json
from .pgm import read_pgm, write_pgm

BUNDLE_FILE = 'bundle.json'
GROUND_TRUTH_FILE = 'ground_truth.json'
CHANNEL_COLUMNS = {
    Modality.ACTION: ['t_ns', 'bend_x', 'bend_y', 'insertion', 'home'],
    Modality.STATE: ['t_ns', 'bend_x_deg', 'bend_y_deg', 'insertion_deg'],
    Modality.POSE: ['t_ns', 'pos_x_m', 'pos_y_m', 'pos_z_m', 'quat_w', 'quat_x', 'quat_y', 'quat_z'],
    Modality.FRAME: ['frame_index', 't_ns', 'frame_ref'],
}


def _channel_frame(channel):
    columns = CHANNEL_COLUMNS[channel.modality]
    if channel.modality is Modality.FRAME:
        return pd.DataFrame({'frame_index': np.arange(len(channel), dtype=np.int64),
                             't_ns': channel.timestamps,
                             'frame_ref': [frame_ref(i) for i in range(len(channel))]}, columns=columns)
    values = channel.values()
    df = pd.DataFrame({'t_ns': channel.timestamps})
    for i, column in enumerate(columns[1:]):
        df[column] = values[:, i] if len(values) else np.empty(0)
    if channel.modality is Modality.ACTION:
        df['home'] = df['home'].astype(np.int64)
    return df


def write_bundle(bundle, path, lcfg=None):
    """
    Write a StreamBundle; equal bundles give byte-identical directories.
    Parameters
    ----------
    bundle : StreamBundle
    path : str or Path
        Created if absent.
    lcfg : LatencyConfig, optional
        Recorded in the ground truth when given.
    Returns
    -------
    Path
    """
    path = Path(path)
    (path / FRAMES_DIR).mkdir(parents=True, exist_ok=True)
    for modality, channel in bundle.channels().items():
        text = to_exact_csv(_channel_frame(channel))
        with open(path / f'{modality.value}.csv', 'w', newline='') as handle:
            handle.write(text)
    for i, sample in enumerate(bundle.frame.samples):
        write_pgm(path / frame_ref(i), sample.pixels)

    info = {'format_version': Constants.FORMAT_VERSION,
            'rates_hz': {m.value: c.nominal_rate for m, c in bundle.channels().items()},
            'quantization_deg': list(bundle.state.quantization_deg or ()),
            'duration_s': bundle.duration_s, 'seed': bundle.seed, 'profile': bundle.profile}
    truth = {'latency_ms': dict(bundle.latency_ms),
             'calibration': OffsetCalibration.from_latencies(bundle.latency_ms).to_dict()}
    if lcfg is not None:
        truth['latency_config'] = lcfg.to_dict()
    with open(path / BUNDLE_FILE, 'w') as handle:
        handle.write(dump_json(info))
    with open(path / GROUND_TRUTH_FILE, 'w') as handle:
        handle.write(dump_json(truth))
    logging.info(f"Wrote bundle {path}: " + ', '.join(f"{m.value} {len(c)}" for m, c in bundle.channels().items()))
    return path


def _read_channel(path, modality, rate, quantization):
    file = path / f'{modality.value}.csv'
    if not file.exists():
        raise FormatError('missing file', path=file)
    df = read_exact_csv(file, CHANNEL_COLUMNS[modality])
    if modality is Modality.FRAME:
        stamps = parse_column(df, 't_ns', int, path=file)
        samples = [FrameSample(int(t), read_pgm(path / ref)[0]) for t, ref in zip(stamps, df['frame_ref'])]
        return Channel(modality, rate, samples)
    columns = {c: parse_column(df, c, int if c in ('t_ns', 'home') else float, path=file)
               for c in CHANNEL_COLUMNS[modality]}
    stamps = [int(t) for t in columns.pop('t_ns')]
    rows = list(zip(*columns.values()))
    if modality is Modality.ACTION:
        samples = [ActionSample(t, float(a), float(b), float(c), int(h)) for t, (a, b, c, h) in zip(stamps, rows)]
    elif modality is Modality.STATE:
        samples = [StateSample(t, *map(float, r)) for t, r in zip(stamps, rows)]
    else:
        samples = [PoseSample(t, r[:3], r[3:]) for t, r in zip(stamps, rows)]
    return Channel(modality, rate, samples, quantization if modality is Modality.STATE else None)


def read_bundle(path):
    """
    Read a bundle written by :func:`write_bundle`.
    Returns
    -------
    StreamBundle
    """
    path = Path(path)
    info = load_json(path / BUNDLE_FILE)
    truth_file = path / GROUND_TRUTH_FILE
    truth = load_json(truth_file) if truth_file.exists() else {}
    try:
        rates = {Modality(k): float(v) for k, v in info['rates_hz'].items()}
        quantization = tuple(float(q) for q in info.get('quantization_deg') or ()) or None
        channels = {m: _read_channel(path, m, rates[m], quantization) for m in Modality}
        return StreamBundle(action=channels[Modality.ACTION], state=channels[Modality.STATE],
                            pose=channels[Modality.POSE], frame=channels[Modality.FRAME],
                            latency_ms=dict(truth.get('latency_ms', {})),
                            duration_s=float(info['duration_s']), profile=info.get('profile', {}),
                            seed=int(info['seed']))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f'bad bundle description ({exc!r})', path=path / BUNDLE_FILE) from exc


def read_ground_truth(path):
    return load_json(Path(path) / GROUND_TRUTH_FILE)
