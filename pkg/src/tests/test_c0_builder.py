import json

import pytest

from c0_builder import (C0Certificate, _make_pick, _reject_reason, build, scale_for, tamper_interval,
                        tamper_scale, threshold_for, verify_c0_inequalities, verify_conditions,
                        verify_proof_bounds)
from certificates import canonical_json
from errors import CertificateFormatError, InsufficientSequenceError, InvalidInputError
from exponents import from_list, geometric
from muntz_poly import sup_norm


@pytest.fixture(scope='module')
def cert4(powers_of_two):
    return build(powers_of_two, 4)


def test_first_function(powers_of_two):
    cert = build(powers_of_two, 1)
    pick = cert.picks[0]
    assert pick.k == 1
    assert [e for e, _ in pick.function.terms] == [2.0, 4.0]
    assert [c for _, c in pick.function.terms] == pytest.approx([2.0, -2.0], rel=1e-14)
    assert pick.interval.a.x == pytest.approx(0.3826834, abs=1e-7)
    assert pick.interval.b.x == pytest.approx(0.9238795, abs=1e-7)
    assert cert.evidence['build_check']['passed']


def test_second_function(powers_of_two):
    cert = build(powers_of_two, 2)
    pick = cert.picks[1]
    assert pick.k == 8
    assert powers_of_two[pick.k] == 256
    assert pick.interval.a.x == pytest.approx(0.98508, abs=1e-5)
    assert pick.interval.b.x == pytest.approx(0.999916, abs=1e-6)
    assert cert.picks[0].function.eval(pick.interval.a) < threshold_for(2)


def test_build_rejects_bad_requests(powers_of_two):
    with pytest.raises(InvalidInputError):
        build(powers_of_two, 0)
    with pytest.raises(InvalidInputError):
        build(from_list([1, 2, 3, 4, 5]), 2)
    with pytest.raises(InvalidInputError):
        build(from_list([0, 1, 2, 4, 8]), 2)


def test_build_reports_exhausted_prefix():
    with pytest.raises(InsufficientSequenceError) as info:
        build(geometric(2, 6), 3)
    assert info.value.achieved == 1


def test_picks_are_minimal(cert4, powers_of_two):
    for n in (2, 3):
        previous = list(cert4.picks[:n - 1])
        k = cert4.picks[n - 1].k
        if k - 1 > previous[-1].k:
            assert _reject_reason(_make_pick(powers_of_two, n, k - 1), previous) is not None


def test_functions_have_prescribed_norms(cert4):
    for pick in cert4.picks:
        assert sup_norm(pick.function).value == pytest.approx(scale_for(pick.n), abs=1e-9)
        assert pick.function.eval(pick.witness) == pytest.approx(scale_for(pick.n), abs=1e-12)


def test_intervals_are_ordered(cert4):
    for left, right in zip(cert4.picks, cert4.picks[1:]):
        assert left.interval.a.x < left.interval.b.x < right.interval.a.x < right.interval.b.x


def test_conditions_hold(cert4):
    report = verify_conditions(cert4, grid_points=2048)
    assert report.passed, report.to_dict()
    assert set(report.margins) == {'i', 'ii', 'iii', 'iv', 'v'}


def test_inequalities_hold(cert4):
    report = verify_c0_inequalities(cert4, trials=25, seed=42)
    assert report.passed, report.to_dict()
    assert 0.25 <= report.min_ratio <= report.max_ratio <= 1.0 + 1e-10
    assert report.vectors_checked == 4 + 2 + 25


def test_inequality_report_is_seeded(cert4):
    first = verify_c0_inequalities(cert4, trials=5, seed=7).to_dict()
    second = verify_c0_inequalities(cert4, trials=5, seed=7).to_dict()
    assert first == second


def test_proof_bounds(cert4):
    bounds = verify_proof_bounds(cert4)
    assert all(b['passed'] for b in bounds.values()), bounds


def test_widened_interval_is_falsified(powers_of_two):
    cert = build(powers_of_two, 3)
    report = verify_conditions(tamper_interval(cert, 2, 1.1), grid_points=2048)
    assert not report.passed
    assert 'iv' in report.failed


def test_rescaled_function_is_falsified(powers_of_two):
    cert = build(powers_of_two, 3)
    report = verify_conditions(tamper_scale(cert, 2, 0.9 / 0.75), grid_points=2048)
    assert 'ii' in report.failed


@pytest.mark.parametrize('n', [1, 2, 3, 4])
def test_small_perturbations_are_detected(cert4, n):
    widened = verify_conditions(tamper_interval(cert4, n, 1.05), grid_points=2048)
    assert not widened.passed
    rescaled = tamper_scale(cert4, n, 1.05)
    assert not (verify_conditions(rescaled, grid_points=2048).passed
                and verify_c0_inequalities(rescaled, trials=5, seed=42).passed)


def test_certificate_survives_json(cert4):
    text = canonical_json(cert4.to_dict())
    again = C0Certificate.from_dict(json.loads(text))
    assert [p.k for p in again.picks] == [p.k for p in cert4.picks]
    assert canonical_json(again.to_dict()) == text


def test_certificate_schema_is_checked(cert4):
    data = cert4.to_dict()
    data['schema'] = 'c0-cert/0'
    with pytest.raises(CertificateFormatError):
        C0Certificate.from_dict(data)
    with pytest.raises(CertificateFormatError):
        C0Certificate.from_dict({'schema': 'c0-cert/1', 'picks': []})


def test_build_is_deterministic(powers_of_two):
    assert canonical_json(build(powers_of_two, 3).to_dict()) == canonical_json(build(powers_of_two, 3).to_dict())


@pytest.mark.slow
def test_eight_functions_full_check(powers_of_two):
    cert = build(powers_of_two, 8, tol=1e-10)
    conditions = verify_conditions(cert, grid_points=100000)
    assert conditions.passed, conditions.to_dict()
    report = verify_c0_inequalities(cert, trials=1000, seed=42)
    assert not report.violations
    assert all(d <= 1e-9 for d in report.norm_deviations)
    assert report.passed
    assert canonical_json(cert.to_dict()) == canonical_json(build(powers_of_two, 8, tol=1e-10).to_dict())
