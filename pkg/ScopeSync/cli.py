import functools
import json
import logging
from pathlib import Path
from time import perf_counter

import click
from sqlalchemy import create_engine

from ScopeSync.config import load_config
from ScopeSync.constants import Axis, Constants, Modality
from ScopeSync.dataset.bundle import read_bundle, read_ground_truth, write_bundle
from ScopeSync.dataset.episode_io import make_meta, read_episode, write_episode
from ScopeSync.dataset.lag_report import dataset_lag
from ScopeSync.dataset.stats import dataset_stats
from ScopeSync.dataset.tasks import TaskLabel
from ScopeSync.dataset.validate import validate_dataset
from ScopeSync.exceptions import (ConflictError, ConsistencyError, DegenerateFitError, FormatError,
                                  InvalidArgumentError, LowConfidenceError, UndefinedCorrelationError)
from ScopeSync.flow.lucas_kanade import load_keypoints
from ScopeSync.scopesim.config import LatencyConfig, configs_from
from ScopeSync.scopesim.profiles import KnotProfile, random_profile, sinusoid_profile
from ScopeSync.scopesim.streams import emit_streams
from ScopeSync.sync.align import align_episode
from ScopeSync.sync.calibrate import OffsetCalibration, characterize_latency
from ScopeSync.sync.lag import signal_lag

CALIBRATION_FILE = 'calibration.json'
PAIRS = {'action-state': (Modality.ACTION, Modality.STATE),
         'state-pose': (Modality.STATE, Modality.POSE)}
EXIT_CODES = {
    InvalidArgumentError: Constants.EXIT_USAGE,
    LowConfidenceError: Constants.EXIT_LOW_CONFIDENCE,
    DegenerateFitError: Constants.EXIT_LOW_CONFIDENCE,
    UndefinedCorrelationError: Constants.EXIT_LOW_CONFIDENCE,
    FormatError: Constants.EXIT_DATA,
    ConsistencyError: Constants.EXIT_DATA,
    ConflictError: Constants.EXIT_DATA,
    OSError: Constants.EXIT_DATA,
}


def exit_codes(command):
    """Turn library errors into the stable exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        start_time = perf_counter()
        try:
            return command(*args, **kwargs)
        except tuple(EXIT_CODES) as exc:
            code = next(code for error, code in EXIT_CODES.items() if isinstance(exc, error))
            logging.debug('failure', exc_info=True)
            click.echo(f'Error: {exc}', err=True)
            click.get_current_context().exit(code)
        finally:
            logging.debug(f"{command.__name__} took {perf_counter() - start_time:.3f} s")
    return wrapper


def parse_latency(ctx, param, value):
    """``state=102,pose=435`` to a dict of milliseconds."""
    if value is None:
        return None
    latency = {}
    for pair in filter(None, (p.strip() for p in value.split(','))):
        name, sep, ms = pair.partition('=')
        if not sep or name.strip() not in {m.value for m in Modality}:
            raise click.BadParameter(f'expected channel=ms with channel in action/state/pose/frame, got {pair!r}')
        try:
            latency[name.strip()] = float(ms)
        except ValueError:
            raise click.BadParameter(f'{ms!r} is not a number of milliseconds') from None
    return latency


def positive(ctx, param, value):
    if value is not None and not value > 0:
        raise click.BadParameter(f'must be positive, got {value}')
    return value


@click.group(chain=True)
@click.option('-c', '--config', 'config_file',
              help='YAML file overriding the packaged defaults',
              type=click.Path(exists=True, dir_okay=False, readable=True))
@click.option('-v', '--verbose', is_flag=True, help='Debug logging')
@click.pass_context
def scopesync(ctx, config_file, verbose):
    """Simulate, characterize, align and curate robotic colonoscope recordings."""
    logging.basicConfig(format=Constants.LOG_FORMAT, level=logging.DEBUG if verbose else logging.INFO)
    ctx.obj = load_config(config_file)


@scopesync.command('simulate')
@click.option('-o', '--output', help='Bundle directory to create', type=click.Path(file_okay=False),
              required=True)
@click.option('--profile', help='Command profile', type=click.Choice(['sinusoid', 'random', 'file']),
              default='sinusoid')
@click.option('--profile-file', help='JSON knot profile for --profile file',
              type=click.Path(exists=True, dir_okay=False))
@click.option('--freq', help='Sinusoid frequency, Hz', type=float, default=0.2, callback=positive)
@click.option('--amp', help='Sinusoid amplitude, normalized', type=float, default=0.5)
@click.option('--axis', help='Excited axis', type=click.Choice([a.value for a in Axis]), default='bend_x')
@click.option('--duration', help='Seconds', type=float, default=60.0, callback=positive)
@click.option('--latency', help='channel=ms pairs, e.g. state=102,pose=435,frame=412',
              callback=parse_latency)
@click.option('--jitter-ms', help='Timestamp jitter standard deviation', type=float)
@click.option('--noise-std', help='Pose position noise standard deviation, metres', type=float)
@click.option('--dropout', help='Per-sample dropout probability', type=float)
@click.option('--seed', help='Seed of every random draw', type=int, required=True)
@click.pass_obj
@exit_codes
def simulate(cfg, output, profile, profile_file, freq, amp, axis, duration, latency, jitter_ms,
             noise_std, dropout, seed):
    """Run the scope simulator and write a raw stream bundle"""
    tcfg, scfg, lcfg = configs_from(cfg)
    overrides = {'latency_ms': {**lcfg.latency_ms, **(latency or {})}, 'seed': seed}
    for key, value in (('jitter_std_ms', jitter_ms), ('noise_std', noise_std), ('dropout_prob', dropout)):
        if value is not None:
            overrides[key] = value
    lcfg = LatencyConfig(**{**lcfg.to_dict(), **overrides})

    if profile == 'sinusoid':
        command = sinusoid_profile(freq, amp, axis)
    elif profile == 'random':
        command = random_profile(duration, seed)
    else:
        if profile_file is None:
            raise click.BadParameter('--profile file needs --profile-file', param_hint='--profile-file')
        command = KnotProfile.from_json(profile_file)

    bundle = emit_streams(command, duration, tcfg, scfg, lcfg, rates=cfg['rates'])
    path = write_bundle(bundle, output, lcfg=lcfg)
    click.echo(json.dumps({'bundle': str(path), 'latency_ms': lcfg.latency_ms,
                           **{m.value: len(c) for m, c in bundle.channels().items()}}, sort_keys=True))


@scopesync.command('characterize')
@click.option('-b', '--bundle', help='Bundle directory', type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option('--freq', help='Excitation frequency, Hz; read from the bundle profile by default',
              type=float, callback=positive)
@click.option('--keypoints', help='JSON list of {x, y} flow keypoints',
              type=click.Path(exists=True, dir_okay=False))
@click.option('-o', '--output', help='Calibration JSON, defaults to <bundle>/calibration.json',
              type=click.Path(dir_okay=False))
@click.option('--workers', help='Threads computing optical flow', type=int, default=1, callback=positive)
@click.pass_obj
@exit_codes
def characterize(cfg, bundle, freq, keypoints, output, workers):
    """Estimate per-channel offsets from a sinusoidal excitation"""
    raw = read_bundle(bundle)
    if freq is None:
        if raw.profile.get('kind') != 'sinusoid':
            raise InvalidArgumentError('the bundle was not excited by a sinusoid; pass --freq')
        freq = float(raw.profile['freq'])
    flow = cfg['flow']
    calibration = characterize_latency(raw, freq,
                                       keypoints=load_keypoints(keypoints) if keypoints else None,
                                       window=int(flow['window']), n_keypoints=int(flow['n_keypoints']),
                                       pool_size=workers)
    calibration.to_json(output or Path(bundle) / CALIBRATION_FILE)
    click.echo(json.dumps(calibration.to_dict(), sort_keys=True))


@scopesync.command('align')
@click.option('-b', '--bundle', help='Bundle directory', type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option('--calibration', help='Calibration JSON, defaults to <bundle>/calibration.json',
              type=click.Path(exists=True, dir_okay=False))
@click.option('--ground-truth', is_flag=True, help='Calibrate with the injected latencies instead')
@click.option('-r', '--root', help='Dataset root', type=click.Path(file_okay=False), required=True)
@click.option('--episode-id', help='Episode directory name, defaults to the bundle name')
@click.option('--task', help='Task id (0-11) or name', default=TaskLabel.INSERTION_LUMEN.label)
@click.option('--instruction', help='Natural-language instruction, defaults per task')
@click.pass_obj
@exit_codes
def align(cfg, bundle, calibration, ground_truth, root, episode_id, task, instruction):
    """Resample a bundle onto the video timestamps and write it as an episode"""
    raw = read_bundle(bundle)
    if ground_truth:
        cal = OffsetCalibration.from_dict(read_ground_truth(bundle)['calibration'])
    else:
        cal = OffsetCalibration.from_json(calibration or Path(bundle) / CALIBRATION_FILE)
    episode = align_episode(raw, cal)
    meta = make_meta(episode, episode_id or Path(bundle).resolve().name, task, instruction)
    path = write_episode(episode, meta, root)
    click.echo(json.dumps({'episode': str(path), 'n_frames': meta.n_frames,
                           'duration_s': meta.duration_s}, sort_keys=True))


@scopesync.command('lag')
@click.option('-e', '--episode', help='Episode directory', type=click.Path(exists=True, file_okay=False))
@click.option('-r', '--root', help='Dataset root; reports the lag of every indexed episode',
              type=click.Path(exists=True, file_okay=False))
@click.option('--pair', help='Signals to compare', type=click.Choice(list(PAIRS)), default='action-state')
@click.option('--tau-max-ms', help='Half-width of the lag window', type=float, callback=positive)
@click.option('--curve', help='CSV receiving the full correlation curve of --episode',
              type=click.Path(dir_okay=False))
@click.option('-o', '--output', help='Directory receiving the per-episode lags and their histogram (--root)',
              type=click.Path(file_okay=False))
@click.pass_obj
@exit_codes
def lag(cfg, episode, root, pair, tau_max_ms, curve, output):
    """Residual lag between two aligned signals of an episode or a dataset"""
    if (episode is None) == (root is None):
        raise click.UsageError('pass exactly one of --episode and --root')
    tcfg, _, _ = configs_from(cfg)
    x, y = PAIRS[pair]
    tau_max_ms = tau_max_ms or float(cfg['sync']['tau_max_ms'])
    min_overlap = int(cfg['sync']['min_overlap'])
    if root is not None:
        report = dataset_lag(root, x, y, pair=pair, tcfg=tcfg, tau_max_ms=tau_max_ms, min_overlap=min_overlap)
        if output:
            output = Path(output)
            output.mkdir(parents=True, exist_ok=True)
            report.episodes.to_csv(output / f'lag_{pair}.csv', index=False)
            report.tau_histogram().to_csv(output / f'lag_{pair}_histogram.csv', index=False)
        click.echo(json.dumps(report.to_dict(), sort_keys=True))
        return

    ep, _ = read_episode(episode)
    estimate = signal_lag(ep.signal(x, tcfg), ep.signal(y, tcfg), ep.rate_hz,
                          tau_max_ms=tau_max_ms, min_overlap=min_overlap)
    if curve:
        estimate.to_frame().to_csv(curve, index=False)
    click.echo(json.dumps({'pair': pair, 'tau_star_samples': estimate.tau_star_samples,
                           'tau_star_ms': estimate.tau_star_ms, 'rho_max': estimate.rho_max},
                          sort_keys=True))


@scopesync.command('stats')
@click.option('-r', '--root', help='Dataset root', type=click.Path(file_okay=False), required=True)
@click.option('-o', '--output', help='Directory receiving the report and histogram CSVs',
              type=click.Path(file_okay=False))
@click.option('-db', '--database', help='SQLAlchemy URL receiving the episode and task tables')
@click.pass_obj
@exit_codes
def stats(cfg, root, output, database):
    """Episode-level statistics of a dataset"""
    report = dataset_stats(root, duration_bins=cfg['dataset']['duration_bins_s'],
                           trajectory_bins=cfg['dataset']['trajectory_bins_m'])
    if output:
        output = Path(output)
        output.mkdir(parents=True, exist_ok=True)
        report.duration_histogram.to_csv(output / 'duration_histogram.csv', index=False)
        report.trajectory_histogram.to_csv(output / 'trajectory_histogram.csv', index=False)
        report.task_frame().to_csv(output / 'task_counts.csv', index=False)
        with open(output / 'stats.json', 'w') as handle:
            json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
    if database:
        engine = create_engine(database)
        report.episodes.to_sql('episodes', engine, if_exists='replace', index=False)
        report.task_frame().to_sql('task_counts', engine, if_exists='replace', index=False)
        logging.info(f"Exported {report.n_episodes} episodes to the {engine.dialect.name} database")
    click.echo(json.dumps(report.to_dict(), sort_keys=True))


@scopesync.command('validate')
@click.option('-r', '--root', help='Dataset root', type=click.Path(file_okay=False), required=True)
@click.option('-o', '--output', help='JSON file receiving the report', type=click.Path(dir_okay=False))
@click.pass_context
@exit_codes
def validate(ctx, root, output):
    """Check every file and invariant of a dataset; exit 0 only when clean"""
    report = validate_dataset(root)
    if output:
        with open(output, 'w') as handle:
            json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
    click.echo(json.dumps(report.to_dict(), sort_keys=True))
    ctx.exit(Constants.EXIT_OK if report.ok else Constants.EXIT_DATA)
