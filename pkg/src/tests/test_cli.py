import json

import pytest

from cli.muntz import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_spikes_table(capsys):
    code, out = run(capsys, 'spikes', '--lambda', 'geometric:2', '--count', '5')
    assert code == 0
    assert 'norm' in out.out


def test_spikes_json(capsys):
    code, out = run(capsys, 'spikes', '--lambda', 'geometric:2', '--count', '5', '--json-only')
    assert code == 0
    data = json.loads(out.out)
    assert [round(p['norm'], 12) for p in data['profiles']] == [0.25] * 5
    assert data['quarter_bound_holds']


def test_c0_and_verify(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    code, _ = run(capsys, 'c0', '--lambda', 'geometric:2', '--n', '3', '--out', str(cert), '--canonical')
    assert code == 0
    code, out = run(capsys, 'verify-c0', str(cert), '--grid', '2048', '--trials', '10', '--seed', '42')
    assert code == 0
    assert 'seed=42' in out.out


def test_verify_tampered_certificate(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    run(capsys, 'c0', '--lambda', 'geometric:2', '--n', '3', '--out', str(cert))
    data = json.loads(cert.read_text())
    interval = data['picks'][1]['interval']
    interval['a']['t'] *= 1.1
    interval['b']['t'] /= 1.1
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(data))
    code, _ = run(capsys, 'verify-c0', str(tampered), '--grid', '2048', '--trials', '5')
    assert code == 1


def test_c0_canonical_output_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, 'c0', '--lambda', 'geometric:2', '--n', '3', '--out', str(a), '--canonical', '--json-only')
    run(capsys, 'c0', '--lambda', 'geometric:2', '--n', '3', '--out', str(b), '--canonical', '--json-only')
    assert a.read_bytes() == b.read_bytes()


def test_c0_extracts_rip_subsequence(capsys):
    code, out = run(capsys, 'c0', '--lambda', 'list:1,1.5,2,3,5,9,20,50', '--n', '1', '--json-only')
    assert code == 0
    assert json.loads(out.out)['exponents']['values'] == [1.0, 2.0, 5.0, 20.0, 50.0]


def test_c0_short_prefix_is_a_limit(capsys):
    code, _ = run(capsys, 'c0', '--lambda', 'geometric:2:count=6', '--n', '3')
    assert code == 2


def test_octa(tmp_path, capsys, three_slices):
    slices = tmp_path / "slices.json"
    slices.write_text(json.dumps([s.to_dict() for s in three_slices]))
    out_path = tmp_path / "octa.json"
    code, out = run(capsys, 'octa', '--slices', str(slices), '--weights', '0.5,0.3,0.2', '--eps', '0.05',
                    '--lambda', 'geometric:2', '--kmax', '64', '--out', str(out_path))
    assert code == 0
    assert 'separation' in out.out
    assert json.loads(out_path.read_text())['passed']


def test_octa_not_found_is_a_limit(tmp_path, capsys, three_slices):
    slices = tmp_path / "slices.json"
    slices.write_text(json.dumps([s.to_dict() for s in three_slices]))
    code, _ = run(capsys, 'octa', '--slices', str(slices), '--eps', '0.05', '--lambda', 'geometric:2', '--kmax', '2')
    assert code == 2


def test_weaknull(capsys, tmp_path):
    csv = tmp_path / "trace.csv"
    code, out = run(capsys, 'weaknull', '--lambda', 'geometric:2', '--functional', '0.3:0.5,0.9:0.5',
                    '--kmax', '30', '--csv', str(csv))
    assert code == 0
    assert 'K=' in out.out
    assert csv.read_text().startswith('k,trace')


@pytest.mark.parametrize('argv', [
    ['spikes'],
    ['bogus'],
    ['spikes', '--lambda', 'geometric:2', '--count', 'five'],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 64


def test_malformed_inputs_exit_64(tmp_path, capsys):
    code, _ = run(capsys, 'spikes', '--lambda', 'fibonacci:1')
    assert code == 64
    code, _ = run(capsys, 'verify-c0', str(tmp_path / "missing.json"))
    assert code == 64
    code, _ = run(capsys, 'weaknull', '--lambda', 'geometric:2', '--functional', '0.5:2')
    assert code == 64
