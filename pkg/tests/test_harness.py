import math

import pytest

from kakeyalab.generators import GeneratorSpec
from kakeyalab.harness import (
    InsufficientRecords,
    NormConfig,
    ResultStore,
    SweepRecord,
    config_hash,
    planar_log_law,
    default_seed,
    fit_exponent,
    report,
    sweep,
)

DELTAS = [2.0 ** -j for j in range(4, 9)]


def planted(exponent, deltas=DELTAS, n=2, p=2.0):
    return [SweepRecord(d, d ** -exponent, "lp", p, 2, 1, 0.25, "bush", n, 1, 1.0, 0, 0.0, "x")
            for d in deltas]


def test_bush_sweep_positive_increasing(tmp_path):
    deltas = [2.0 ** -j for j in range(4, 10)]
    recs = sweep(GeneratorSpec("bush", 2, deltas[0]), deltas, NormConfig("lp", 2.0), out=tmp_path)
    assert len(recs) == 6
    vals = [r.norm_value for r in recs]
    assert all(v > 0 for v in vals) and all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_single_tube_normalized(p):
    recs = sweep(GeneratorSpec("random_separated", 2, 1 / 16, count=1, seed=2), DELTAS[:3], NormConfig("lp", p))
    for r in recs:
        assert r.normalized == pytest.approx(1.0, rel=0.02)


def test_empty_family_zero():
    for kind in ("lp", "broad"):
        recs = sweep(GeneratorSpec("random_separated", 2, 1 / 16, count=0), DELTAS[:3], NormConfig(kind))
        assert all(r.norm_value == 0 for r in recs)


def test_sweep_preconditions():
    spec = GeneratorSpec("bush", 2, 1 / 16)
    with pytest.raises(ValueError):
        sweep(spec, DELTAS[:2])
    with pytest.raises(ValueError):
        sweep(spec, DELTAS[::-1])
    with pytest.raises(ValueError):
        sweep(spec, [1 / 8, 1 / 16, 1 / 32])


def test_planted_law():
    fit = fit_exponent(planted(0.5))
    assert fit.slope == pytest.approx(0.5) and fit.r_squared == pytest.approx(1.0)


def test_fit_needs_five_scales():
    with pytest.raises(InsufficientRecords):
        fit_exponent(planted(0.5, DELTAS[:4]))


def test_maximal_random_family_slope():
    deltas = [2.0 ** -j for j in range(4, 9)]
    spec = GeneratorSpec("random_separated", 2, deltas[0], seed=1)
    fit = fit_exponent(sweep(spec, deltas, NormConfig("lp", 2.0)))
    assert fit.theory_slope == 0 and fit.slope <= 0.15
    assert math.isfinite(fit.log_power)


def test_l1_slope_is_zero():
    spec = GeneratorSpec("random_separated", 2, DELTAS[0], seed=1)
    fit = fit_exponent(sweep(spec, DELTAS, NormConfig("lp", 1.0)))
    assert abs(fit.slope) <= 0.1 and fit.theory_slope == 0


def test_determinism_and_round_trip(tmp_path):
    spec = GeneratorSpec("random_separated", 2, DELTAS[0], count=30, seed=4)
    norm = NormConfig("broad", 2.0, k=2, A=1, beta=0.25, net_size=4)
    a = sweep(spec, DELTAS[:3], norm, out=tmp_path)
    b = sweep(spec, DELTAS[:3], norm)
    assert [r.norm_value for r in a] == [r.norm_value for r in b]
    back = ResultStore(tmp_path).read()
    assert back == a
    man = ResultStore(tmp_path).manifest()
    assert config_hash(spec, norm) in man and man[config_hash(spec, norm)]["seed"] == 4


def test_parallel_matches_serial(tmp_path):
    spec = GeneratorSpec("random_separated", 2, DELTAS[0], count=20, seed=5)
    serial = sweep(spec, DELTAS[:3])
    par = sweep(spec, DELTAS[:3], workers=2, out=tmp_path)
    assert [r.norm_value for r in par] == [r.norm_value for r in serial]
    assert [r.delta for r in ResultStore(tmp_path).read()] == DELTAS[:3]


def test_partial_results_persisted(tmp_path, monkeypatch):
    import kakeyalab.harness as h

    real = h.generate

    def failing(spec):
        if spec.delta < 1 / 40:
            raise ValueError("boom")
        return real(spec)

    monkeypatch.setattr(h, "generate", failing)
    with pytest.raises(ValueError):
        sweep(GeneratorSpec("bush", 2, 1 / 16), [1 / 16, 1 / 32, 1 / 64], out=tmp_path)
    assert [r.delta for r in ResultStore(tmp_path).read()] == [1 / 16, 1 / 32]


def test_default_seed_env(monkeypatch):
    monkeypatch.setenv("KAKEYALAB_SEED", "17")
    assert default_seed() == 17


def test_report(tmp_path):
    sweep(GeneratorSpec("bush", 2, DELTAS[0]), DELTAS, out=tmp_path)
    text = report(tmp_path)
    assert "slope=" in text and (tmp_path / "fits.csv").exists()


def test_planar_log_law():
    r = planar_log_law()
    assert r.passed and r.r_squared >= 0.8
