import json

import numpy as np
import pytest

from substructure_ers.beam_engine import BridgeGeometry, ReactionEnvelope, SweepConfig
from substructure_ers.exceedance import (
    EnvelopeSet,
    EnvelopeKey,
    compute_ers,
    default_span_grid,
    exceedance_rate,
    exceeds,
    read_spectrum_csv,
    run_campaign,
    vehicle_envelopes,
)
from substructure_ers.load_models import load_model_config
from substructure_ers.wim import VehicleRecord, default_fleet_spec, save_wim, synthesize_fleet

COARSE = SweepConfig(0.05)
SHORT_GRID = [5.0, 10.0, 20.0, 40.0]


def truck_model(axles, spacings, uniform=0.0, name="truck"):
    return load_model_config(json.dumps({"name": name, "variants": [{
        "label": "t", "axles_kn": list(axles), "spacings_m": list(spacings),
        "uniform_kn_per_m": uniform}]}))


def uniform_model(w=9.0):
    return load_model_config(json.dumps({"name": "lane", "variants": [{
        "label": "lane", "axles_kn": [], "spacings_m": [], "uniform_kn_per_m": w}]}))


def env(mx, mn):
    return ReactionEnvelope(mx, mn, 0.0, 0.0)


@pytest.fixture(scope="module")
def fleet():
    return synthesize_fleet(default_fleet_spec(), 200, seed=21)


def test_default_grid():
    g = default_span_grid()
    assert len(g) == 44 and g[:3] == [1, 2, 3] and g[30] == 35 and g[-1] == 100
    assert g == sorted(g)


def test_exceeds_examples():
    assert exceeds(env(90, -10), env(100, -5))
    assert exceeds(env(120, 0), env(100, -5))
    assert not exceeds(env(100, -5), env(100, -5))


def _set(pairs):
    key = EnvelopeKey("f", 1, 10.0, 0, 0.01, "both")
    vals = np.array([[a, b, 0, 0] for a, b in pairs], dtype=float)
    return EnvelopeSet(key, np.arange(len(pairs)), vals)


def test_rate_examples():
    es = _set([(120, 0)] * 3 + [(50, 0)] * 7)
    r = exceedance_rate(es, env(100, -5))
    assert r.rate_percent == 30.0 and r.n_exceeding == 3 and r.n_total == 10
    assert r.n_max_side == 3 and r.n_min_side == 0
    assert exceedance_rate(_set([(50, -1), (60, -2)]), env(40, 0)).rate_percent == 100.0
    assert exceedance_rate(_set([(50, -1), (60, -2)]), env(1e3, -1e3)).rate_percent == 0.0
    with pytest.raises(ValueError):
        exceedance_rate(_set([]), env(1, 0))


def test_single_axle_vehicle_envelope():
    es = vehicle_envelopes([VehicleRecord(1, (100.0, 1e-9), (1e-6,))], BridgeGeometry(1, 10.0), 0)
    assert es.max[0] == pytest.approx(100.0) and es.min[0] == pytest.approx(0.0, abs=1e-6)


def test_empty_fleet():
    with pytest.raises(ValueError):
        vehicle_envelopes([], BridgeGeometry(1, 10.0), 0)


def test_envelopes_linear_in_weights(fleet):
    g = BridgeGeometry(2, 15.0)
    a = vehicle_envelopes(fleet, g, 0, COARSE)
    b = vehicle_envelopes([r.scaled(2.0) for r in fleet], g, 0, COARSE)
    np.testing.assert_allclose(b.max, 2 * a.max, rtol=1e-12)
    np.testing.assert_allclose(b.min, 2 * a.min, rtol=1e-12, atol=1e-12)


def test_envelopes_order_by_id(fleet):
    g = BridgeGeometry(2, 15.0)
    a = vehicle_envelopes(fleet, g, 1, COARSE)
    b = vehicle_envelopes(fleet[::-1], g, 1, COARSE)
    assert list(a.ids) == sorted(r.id for r in fleet)
    assert np.array_equal(a.values, b.values)


def test_cache_round_trip_bit_identical(fleet, tmp_path):
    g = BridgeGeometry(3, 12.0)
    a = vehicle_envelopes(fleet, g, 1, COARSE, cache_dir=tmp_path)
    b = vehicle_envelopes(fleet, g, 1, COARSE, cache_dir=tmp_path)
    assert not a.from_cache and b.from_cache
    assert np.array_equal(a.values, b.values) and np.array_equal(a.ids, b.ids)
    assert len(list(tmp_path.glob("*.csv"))) == 1
    # a different key misses
    c = vehicle_envelopes(fleet, g, 2, COARSE, cache_dir=tmp_path)
    assert not c.from_cache


def test_cache_env_var(fleet, tmp_path, monkeypatch):
    monkeypatch.setenv("SUBSTRUCTURE_ERS_CACHE", str(tmp_path))
    vehicle_envelopes(fleet[:5], BridgeGeometry(1, 10.0), 0, COARSE)
    assert len(list(tmp_path.glob("*.json"))) == 1


def test_self_comparison_zero_and_dominance_hundred():
    axles, spacings = (35.0, 145.0, 145.0), (4.3, 4.3)
    model = truck_model(axles, spacings)
    same = [VehicleRecord(1, axles, spacings)]
    heavier = [VehicleRecord(1, tuple(a * 1.01 for a in axles), spacings)]
    for fam, sup in ((1, 0), (2, 0), (2, 1), (3, 1), (4, 2)):
        s0 = compute_ers(same, fam, sup, model, SHORT_GRID, COARSE)
        s1 = compute_ers(heavier, fam, sup, model, SHORT_GRID, COARSE)
        assert all(r == 0.0 for r in s0.rates)
        assert all(r == 100.0 for r in s1.rates)


def test_mirror_support_spectra_identical(fleet):
    model = truck_model((50, 125, 125, 175, 150), (3.6, 1.2, 6.6, 6.6))
    e = compute_ers(fleet, 3, 1, model, SHORT_GRID, COARSE)
    f = compute_ers(fleet, 3, 2, model, SHORT_GRID, COARSE)
    assert e.support_letter == "E" and f.support_letter == "F"
    assert e.to_csv() == f.to_csv()


def test_uplift_hundred_percent(fleet):
    longest = max(r.length for r in fleet)
    spans = [s for s in default_span_grid() if s > longest][:6]
    s = compute_ers(fleet, 2, 0, uniform_model(), spans, COARSE)
    assert all(r == 100.0 for r in s.rates)


def test_truck_only_captures_when_heavier():
    # every vehicle is dominated axle-for-axle by the model truck
    truck = (60.0, 150.0, 150.0)
    fleet = [VehicleRecord(i, (40.0 + i, 100.0, 120.0 - i), (4.3, 4.3)) for i in range(10)]
    s = compute_ers(fleet, 2, 0, truck_model(truck, (4.3, 4.3)), [20.0, 30.0, 50.0], COARSE)
    assert all(r < 100.0 for r in s.rates)
    assert all(r == 0.0 for r in s.rates)


def test_scale_equivariance(fleet):
    model = truck_model((35, 145, 145), (4.3, 4.3), uniform=9.3)
    a = compute_ers(fleet, 2, 1, model, SHORT_GRID, COARSE)
    b = compute_ers([r.scaled(3.0) for r in fleet], 2, 1, model.scaled(3.0), SHORT_GRID, COARSE)
    assert np.array_equal(a.rates, b.rates)


def test_monotone_in_reference(fleet):
    g = BridgeGeometry(2, 20.0)
    es = vehicle_envelopes(fleet, g, 0, COARSE)
    rng = np.random.default_rng(0)
    for _ in range(50):
        mx, mn = rng.uniform(0, 400), rng.uniform(-100, 0)
        r0 = exceedance_rate(es, env(mx, mn)).rate_percent
        r1 = exceedance_rate(es, env(mx + rng.uniform(0, 50), mn - rng.uniform(0, 20))).rate_percent
        assert r1 <= r0


def test_long_span_gvw_limit():
    fleet = synthesize_fleet(default_fleet_spec(), 300, seed=4)
    axles = (35.0, 145.0, 145.0)
    s = compute_ers(fleet, 1, 0, truck_model(axles, (4.3, 4.3)), [2000.0], SweepConfig(0.5))
    direct = 100.0 * sum(r.gvw > sum(axles) for r in fleet) / len(fleet)
    assert abs(s.rates[0] - direct) <= 0.1 + 100.0 / len(fleet)


def test_coverage_and_support_checked_up_front(fleet):
    short_only = load_model_config(json.dumps({"name": "s", "variants": [
        {"label": "a", "applies": {"span_max_m": 30}, "axles_kn": [100, 100], "spacings_m": [4]},
        {"label": "b", "applies": {"span_min_m": 30}, "axles_kn": [100, 100], "spacings_m": [4]}]}))
    object.__setattr__(short_only, "variants", short_only.variants[:1])
    with pytest.raises(ValueError, match="does not cover"):
        compute_ers(fleet, 1, 0, short_only, [10.0, 40.0], COARSE)
    with pytest.raises(ValueError):
        compute_ers(fleet, 2, 3, truck_model((1, 1), (1,)), [10.0], COARSE)


def test_spectrum_csv_round_trip(fleet):
    s = compute_ers(fleet, 1, 0, truck_model((35, 145, 145), (4.3, 4.3)), SHORT_GRID, COARSE)
    pts = read_spectrum_csv(s.to_csv())
    assert [p.span_m for p in pts] == SHORT_GRID
    assert [p.rate_percent for p in pts] == list(s.rates)
    for p in pts:
        assert p.rate_percent == 100.0 * p.n_exceeding / p.n_total
    with pytest.raises(ValueError):
        read_spectrum_csv("a,b\n1,2\n")


def _campaign(tmp_path, fleet, models):
    save_wim(fleet, tmp_path / "fleet.csv")
    cfg = {"output_dir": "out", "cache_dir": "cache", "fleets": {"syn": "fleet.csv"},
           "models": models, "families": {"2": [0, 1]}, "grid": [10.0, 20.0], "step": 0.05}
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(cfg))
    return path


def test_campaign_counting_and_rerun(tmp_path, fleet):
    path = _campaign(tmp_path, fleet[:50], ["HL-93", "CL-625"])
    m1 = run_campaign(path)
    assert [c["state"] for c in m1["cells"]] == ["done"] * 4
    outs = [p for p in (tmp_path / "out").glob("*.csv") if not p.name.endswith(".sides.csv")]
    assert len(outs) == 4
    # two supports x two spans, shared by both models
    assert len(list((tmp_path / "cache").glob("*.csv"))) == 4
    before = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.csv")}
    m2 = run_campaign(path)
    assert [c["state"] for c in m2["cells"]] == ["cache-hit"] * 4
    after = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.csv")}
    assert before == after


def test_campaign_isolates_missing_model(tmp_path, fleet):
    path = _campaign(tmp_path, fleet[:20], ["HL-93", "nowhere.json"])
    m = run_campaign(path)
    states = [(c["model"], c["state"]) for c in m["cells"]]
    assert states.count(("HL-93", "done")) == 2
    assert states.count(("nowhere.json", "error")) == 2
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["cells"] == m["cells"]
