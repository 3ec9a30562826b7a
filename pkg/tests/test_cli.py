import json
import os

import pandas as pd
import pytest
from click.testing import CliRunner
from sqlalchemy import create_engine

from ScopeSync.cli import scopesync
from ScopeSync.constants import Constants


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'small.yaml'
    path.write_text('scope:\n  frame_width: 96\n  frame_height: 96\n')
    return str(path)


def run(config_file, *args):
    return CliRunner().invoke(scopesync, ['--config', config_file, *map(str, args)])


def last_json(result):
    return json.loads(result.output.strip().splitlines()[-1])


def tree_bytes(root):
    files = {}
    for folder, _, names in os.walk(root):
        for name in names:
            path = os.path.join(folder, name)
            with open(path, 'rb') as handle:
                files[os.path.relpath(path, root)] = handle.read()
    return files


def test_usage_errors(config_file, tmp_path):
    out = tmp_path / 'bundle'
    assert run(config_file, 'simulate', '-o', out, '--seed', 1, '--duration', 0).exit_code == Constants.EXIT_USAGE
    assert run(config_file, 'simulate', '-o', out).exit_code == Constants.EXIT_USAGE
    assert run(config_file, 'simulate', '-o', out, '--seed', 1, '--latency', 'state=slow').exit_code == 2
    assert run(config_file, 'simulate', '-o', out, '--seed', 1, '--profile', 'file').exit_code == 2
    assert run(config_file, 'simulate', '-o', out, '--seed', 1, '--duration', 0.3).exit_code == 2
    assert not (out / 'bundle.json').exists()


def test_simulate_is_deterministic(config_file, tmp_path):
    for name in ('first', 'second'):
        result = run(config_file, 'simulate', '-o', tmp_path / name, '--seed', 7, '--duration', 2,
                     '--profile', 'random', '--jitter-ms', 1.5, '--noise-std', 0.0005, '--dropout', 0.05)
        assert result.exit_code == 0, result.output
    first, second = tree_bytes(tmp_path / 'first'), tree_bytes(tmp_path / 'second')
    assert first == second
    assert 'frames/000000.pgm' in first
    assert run(config_file, 'simulate', '-o', tmp_path / 'third', '--seed', 8, '--duration', 2,
               '--profile', 'random', '--jitter-ms', 1.5).exit_code == 0
    assert tree_bytes(tmp_path / 'third')['state.csv'] != first['state.csv']


def test_pipeline(config_file, tmp_path):
    bundle, root, report = tmp_path / 'run01', tmp_path / 'dataset', tmp_path / 'report'

    result = run(config_file, 'simulate', '-o', bundle, '--seed', 3, '--duration', 20)
    assert result.exit_code == 0, result.output
    summary = last_json(result)
    assert summary['frame'] == 600 and summary['pose'] == 800
    assert summary['latency_ms']['pose'] == 435.0

    result = run(config_file, 'characterize', '-b', bundle, '--workers', 2)
    assert result.exit_code == 0, result.output
    offsets = last_json(result)['offsets_ms']
    assert offsets['state'] == pytest.approx(-310.0, abs=15.0)
    assert (bundle / 'calibration.json').exists()

    result = run(config_file, 'align', '-b', bundle, '-r', root, '--task', 'retraction_left')
    assert result.exit_code == 0, result.output
    aligned = last_json(result)
    assert aligned['episode'].endswith(os.path.join('episodes', 'run01'))
    result = run(config_file, 'align', '-b', bundle, '-r', root, '--ground-truth', '--episode-id', 'truth',
                 '--task', 3)
    assert result.exit_code == 0, result.output
    assert run(config_file, 'align', '-b', bundle, '-r', root).exit_code == Constants.EXIT_DATA

    curve = tmp_path / 'curve.csv'
    result = run(config_file, 'lag', '-e', root / 'episodes' / 'truth', '--curve', curve)
    assert result.exit_code == 0, result.output
    lag = last_json(result)
    assert abs(lag['tau_star_samples']) <= 1
    assert len(pd.read_csv(curve)) == 61
    result = run(config_file, 'lag', '-e', root / 'episodes' / 'run01', '--pair', 'state-pose',
                 '--tau-max-ms', 300)
    assert result.exit_code == 0, result.output
    assert abs(last_json(result)['tau_star_samples']) <= 1

    database = f"sqlite:///{tmp_path / 'stats.db'}"
    result = run(config_file, 'stats', '-r', root, '-o', report, '-db', database)
    assert result.exit_code == 0, result.output
    stats = last_json(result)
    assert stats['n_episodes'] == 2
    assert stats['task_counts']['retraction_left'] == 1 and stats['task_counts']['insertion_top'] == 1
    assert json.loads((report / 'stats.json').read_text()) == stats
    assert pd.read_csv(report / 'duration_histogram.csv')['count'].tolist()[1] == 2
    episodes = pd.read_sql_table('episodes', create_engine(database))
    assert sorted(episodes['id']) == ['run01', 'truth']

    result = run(config_file, 'lag', '-r', root, '--pair', 'state-pose', '-o', tmp_path / 'lags')
    assert result.exit_code == 0, result.output
    lags = last_json(result)
    assert lags['n_episodes'] == 2 and lags['n_undefined'] == 0
    assert lags['median_abs_tau_samples'] <= 1
    per_episode = pd.read_csv(tmp_path / 'lags' / 'lag_state-pose.csv')
    assert sorted(per_episode['id']) == ['run01', 'truth']
    tau_histogram = pd.read_csv(tmp_path / 'lags' / 'lag_state-pose_histogram.csv')
    assert len(tau_histogram) == 61 and tau_histogram['count'].sum() == 2
    assert run(config_file, 'lag', '-r', root, '-e', root / 'episodes' / 'truth').exit_code == 2
    assert run(config_file, 'lag').exit_code == Constants.EXIT_USAGE

    result = run(config_file, 'validate', '-r', root, '-o', tmp_path / 'absent' / 'validation.json')
    assert result.exit_code == Constants.EXIT_DATA

    result = run(config_file, 'validate', '-r', root, '-o', tmp_path / 'validation.json')
    assert result.exit_code == 0, result.output
    assert last_json(result)['ok'] is True

    records = root / 'episodes' / 'truth' / 'records.csv'
    lines = records.read_text().split('\n')
    fields = lines[3].split(',')
    fields[12] = '3.0'
    lines[3] = ','.join(fields)
    records.write_text('\n'.join(lines))
    result = run(config_file, 'validate', '-r', root)
    assert result.exit_code == Constants.EXIT_DATA
    problems = last_json(result)['problems']
    assert [(p['episode'], p['line']) for p in problems] == [('truth', 4)]


def test_flat_excitation_is_low_confidence(config_file, tmp_path):
    bundle = tmp_path / 'flat'
    assert run(config_file, 'simulate', '-o', bundle, '--seed', 1, '--duration', 12, '--amp', 0).exit_code == 0
    result = run(config_file, 'characterize', '-b', bundle)
    assert result.exit_code == Constants.EXIT_LOW_CONFIDENCE


def test_characterize_needs_a_frequency(config_file, tmp_path):
    bundle = tmp_path / 'random'
    assert run(config_file, 'simulate', '-o', bundle, '--seed', 1, '--duration', 2, '--profile', 'random',
               '--latency', 'state=0,pose=0,frame=0').exit_code == 0
    assert run(config_file, 'characterize', '-b', bundle).exit_code == Constants.EXIT_USAGE


def test_stats_of_empty_root(config_file, tmp_path):
    result = run(config_file, 'stats', '-r', tmp_path / 'nothing')
    assert result.exit_code == 0, result.output
    assert last_json(result)['n_episodes'] == 0
    assert last_json(result)['total_hours'] == 0.0
