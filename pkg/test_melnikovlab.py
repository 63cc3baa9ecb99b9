#! /usr/bin/env python3
# coding=utf8

import csv
import json
import math
import os
import tempfile

from duct import cmd, sh
import pytest

zero_perturbation = {"n": 2, "plus": {"p": [], "q": []},
                     "minus": {"p": [], "q": []}}

sample_perturbation = {
    "n": 3,
    "plus": {"p": [[1, 0, "1/2"]], "q": [[0, 0, 1], [0, 1, "-3/4"]]},
    "minus": {"p": [[2, 1, 3]], "q": [[2, 0, "0.25"], [1, 2, -1]]},
}


def write_temp(obj):
    _, temp = tempfile.mkstemp(suffix='.json')
    with open(temp, 'w') as f:
        f.write(obj if isinstance(obj, str) else json.dumps(obj))
    return temp


def status(*args):
    command = ["python", "-m", "melnikovlab"] + list(args)
    return cmd(*command).stdout_capture().stderr_capture().unchecked() \
        .run().status


def test_bound():
    assert sh('python -m melnikovlab bound --family triangle --n 3') \
        .read() == '198'
    assert sh('python -m melnikovlab bound --family elliptic --n 3') \
        .read() == '236'
    assert sh('python -m melnikovlab bound --family parabolic --n 2') \
        .read() == '48'


def test_bound_chain():
    output = sh('python -m melnikovlab bound --family triangle --n 3 '
                '--chain').read()
    print(output)
    chain = json.loads(output)
    assert chain['total'] == 191
    assert chain['bound'] == 198
    assert chain['k0'] == 14
    assert chain['within_bound']


def test_families():
    output = sh('python -m melnikovlab families').read()
    report = json.loads(output)
    assert len(report) == 6
    triangle, = [r for r in report if r['case'] == 'triangle']
    assert triangle['annuli'] == [{'annulus': 'sole', 'lower': '0',
                                   'upper': '1/6', 'center_energy': '0'}]
    kinds = sorted(p['kind'] for p in triangle['critical_points'])
    assert kinds == ['center', 'saddle', 'saddle', 'saddle']


def test_integral():
    output = sh('python -m melnikovlab integral --family parabolic '
                '-- 0 0 -1').read()
    print(output)
    value = json.loads(output)['value']
    assert abs(value - 2 * math.sqrt(2)) < 1e-9
    output = sh('python -m melnikovlab integral --family parabolic '
                '--derivative -- 1 0 -1').read()
    assert abs(json.loads(output)['value'] - 4 / math.sqrt(2)) < 1e-9


def test_integral_rational_energy():
    output = sh('python -m melnikovlab integral --family parabolic '
                '-- 0 0 -3/2').read()
    report = json.loads(output)
    assert report['h'] == -1.5
    assert abs(report['value'] - 2) < 1e-9
    output = sh('python -m melnikovlab integral --family triangle '
                '-- 0 1 1/12').read()
    assert json.loads(output)['h'] == pytest.approx(1 / 12)


def test_reduce():
    temp = write_temp(sample_perturbation)
    output = cmd('python', '-m', 'melnikovlab', 'reduce', '--family',
                 'elliptic', '--lambda', '1/2', '--pert', temp).read()
    print(output)
    report = json.loads(output)
    assert report['degrees']['passed']
    assert sorted(report['melnikov']) == \
        ['J00', 'J01', 'J02', 'J10', 'J11', 'J21']


def test_reduce_random():
    output = sh('python -m melnikovlab reduce --family triangle --n 3 '
                '--seed 3').read()
    assert json.loads(output)['perturbation']['n'] == 3


def test_melnikov_zero_perturbation():
    temp = write_temp(zero_perturbation)
    _, csv_path = tempfile.mkstemp(suffix='.csv')
    output = cmd('python', '-m', 'melnikovlab', 'melnikov', '--family',
                 'parabolic', '--pert', temp, '--grid', '100', '--csv',
                 csv_path).read()
    report = json.loads(output)
    assert report['zeros'] == []
    assert report['count_sign_changes'] == 0
    assert report['within_bound']
    with open(csv_path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['h', 'M']
    assert len(rows) == 101
    assert all(float(value) == 0 for _, value in rows[1:])


def test_melnikov_at_one_energy():
    temp = write_temp(sample_perturbation)
    output = cmd('python', '-m', 'melnikovlab', 'melnikov', '--family',
                 'triangle', '--pert', temp, '--h=0.08').read()
    report = json.loads(output)
    assert abs(report['symbolic'] - report['numeric']) <= \
        1e-7 * max(1, abs(report['numeric']))


def test_verify_pf():
    assert status('verify', 'pf', '--family', 'parabolic', '--samples', '50',
                  '--tol', '1e-8') == 0


def test_verify_fails_with_impossible_tolerance():
    assert status('verify', 'recurrence', '--family', 'triangle',
                  '--samples', '3', '--tol', '0') == 1


def test_bad_command_line():
    assert status('bogus') == 2
    assert status('bound', '--family', 'triangle') == 2


def test_out_of_family():
    assert status('families', '--family', 'elliptic', '--lambda', '3') == 1
    assert status('families', '--family', 'triangle', '--lambda', '1') == 1
    assert status('bound', '--family', 'elliptic', '--n', '2') == 1


def test_bad_perturbation_file():
    for contents in ('{not json', '{"n": 1, "plus": {"q": [[2, 0, 1]]}}',
                     '{"plus": {}}'):
        temp = write_temp(contents)
        assert status('reduce', '--family', 'triangle', '--pert', temp) == 1
        os.remove(temp)


def test_stress():
    output = sh('python -m melnikovlab stress --family parabolic --n 2 '
                '--count 3 --grid 100').read()
    report = json.loads(output)
    assert report['runs'] == 3
    assert report['bound'] == 48
    assert report['max_sign_changes'] <= 48


def test_xcheck():
    temp = write_temp({"n": 1, "plus": {"q": [[0, 0, 1]]}})
    output = cmd('python', '-m', 'melnikovlab', 'xcheck', '--family',
                 'parabolic', '--pert', temp, '--eps', '1e-3', '--grid',
                 '4').read()
    report = json.loads(output)
    assert report['c0'] == 1
    assert len(report['samples']) == 4
    assert all(row['signs_agree'] for row in report['samples'])
    assert report['limit_cycles'] == []
