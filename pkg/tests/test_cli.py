import csv
import json
import os
import subprocess
import sys

import jsonschema
import pytest

import nudd
from nudd._workers import worker_count
from nudd.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def validate(report, name):
    jsonschema.validate(report, nudd.schema(name))


def test_verify_example(capsys):
    code, out = run(capsys, 'verify', '--m', '1', '--orders', '3')
    report = json.loads(out.out)
    assert code == 0 and report['passed'] is True
    assert report['config']['orders'] == [3, 3]
    validate(report, 'verify')


def test_verify_dephasing_only(capsys):
    code, out = run(capsys, 'verify', '--m', '1', '--orders', '4', '--dephasing-only')
    report = json.loads(out.out)
    assert code == 0 and report['config']['levels'] == 1
    validate(report, 'verify')


def test_verify_failure_exit(capsys):
    # a zero tolerance turns roundoff into a reported failure
    code, out = run(capsys, 'verify', '--m', '1', '--orders', '3', '--tolerance', '0')
    report = json.loads(out.out)
    validate(report, 'verify')
    assert code == 1 and report['passed'] is False
    assert report['worst_query'] is not None


def test_schedule_example(capsys):
    code, out = run(capsys, 'schedule', '--m', '2', '--orders', '2')
    report = json.loads(out.out)
    assert code == 0 and len(report['pulses']) == 81
    fr = [p['fraction'] for p in report['pulses']]
    assert fr == sorted(set(fr))
    validate(report, 'schedule')
    code, out = run(capsys, 'schedule', '--m', '2', '--orders', '2', '--merged')
    assert len(json.loads(out.out)['pulses']) == 80


def test_schedule_csv(capsys):
    code, out = run(capsys, 'schedule', '--m', '1', '--orders', '1', '--format', 'csv')
    lines = out.out.splitlines()
    assert lines[0].startswith('# config: ')
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ['fraction', 'ops'] and len(rows) == 5
    assert rows[-1][1] == 'X1 Z1'


def test_walk_map_example(capsys):
    code, out = run(capsys, 'walk-map', '--m', '1', '--N', '4', '--steps', '3')
    assert code == 0
    assert '@' not in out.out.split('\n\nS initial')[0]
    assert 'step 3' in out.out


def test_walk_map_json(capsys):
    code, out = run(capsys, 'walk-map', '--m', '1', '--N', '4', '--steps', '4',
                    '--beta', '01', '--format', 'json')
    report = json.loads(out.out)
    validate(report, 'walk_map')
    assert report['zero_check']['passed'] and report['zero_check']['first_reaching_step'] == 4
    assert any(5 in k for k in report['steps']['4'])
    assert not any(5 in k for k in report['steps']['3'])


def test_simulate(capsys, tmp_path):
    path = tmp_path / 'sim.json'
    code, out = run(capsys, 'simulate', '--m', '1', '--orders', '1', '--seed', '1',
                    '--t-list', '0.003,0.01,0.03,0.1', '--output', str(path))
    report = json.loads(path.read_text())
    validate(report, 'simulate')
    assert code == 0 and report['passed'] and report['expected_slope'] == 2
    assert [p.name for p in tmp_path.iterdir()] == ['sim.json']


def test_simulate_csv(capsys):
    code, out = run(capsys, 'simulate', '--m', '1', '--orders', '1', '--no-pulses',
                    '--t-list', '0.003,0.01,0.03,0.1', '--format', 'csv')
    rows = list(csv.reader(out.out.splitlines()[1:]))
    assert code == 0 and rows[0] == ['T', 'epsilon'] and len(rows) == 5


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(['verify', '--m', '1'])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(['verify', '--m', '1', '--orders', 'x'])
    assert exc.value.code == 2
    code, out = run(capsys, 'verify', '--m', '1', '--orders', '2', '--levels', '3')
    assert code == 2 and 'usage' in out.err
    code, out = run(capsys, 'verify', '--m', '2', '--orders', '2', '--dephasing-only')
    assert code == 2


def test_byte_identical_reports(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f'r{i}.json'
        assert main(['verify', '--m', '1', '--orders', '2', '-o', str(path)]) == 0
        report = json.loads(path.read_text())
        report.pop('wall_time')
        outs.append(json.dumps(report, indent=2))
    assert outs[0] == outs[1]
    sims = []
    for i in range(2):
        path = tmp_path / f's{i}.json'
        main(['simulate', '--m', '1', '--orders', '1', '--t-list', '0.003,0.01,0.03,0.1',
              '-o', str(path)])
        sims.append(path.read_bytes())
    assert sims[0] == sims[1]


def test_worker_count(monkeypatch):
    monkeypatch.setenv('NUDD_THREADS', '3')
    assert worker_count(None) == 3
    assert worker_count(5) == 5
    monkeypatch.delenv('NUDD_THREADS')
    assert worker_count(None) >= 1


def test_console_script():
    out = subprocess.run([sys.executable, '-m', 'nudd.cli', 'schedule', '--m', '1',
                          '--orders', '2'], capture_output=True, text=True,
                         env={**os.environ, 'NUDD_THREADS': '1'})
    assert out.returncode == 0 and len(json.loads(out.stdout)['pulses']) == 9
