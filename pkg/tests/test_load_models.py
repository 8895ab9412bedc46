import json

import numpy as np
import pytest

from oracles import three_moment_far_span
from substructure_ers.beam_engine import (AxleTrain, BridgeGeometry, SweepConfig,
                                          build_influence_line, sweep_envelope, uniform_reaction)
from substructure_ers.load_models import (
    DEFAULT_MODEL_FILES,
    ConcreteCase,
    ModelConfigError,
    case_envelope,
    default_model,
    default_model_path,
    default_models,
    dump_model,
    load_model,
    load_model_config,
    model_envelope,
    resolve_cases,
)


def variant(label="v", axles=(100.0, 150.0, 150.0), spacings=(4.0, 5.0), uniform=0.0,
            scale=1.0, span_min=None, span_max=None):
    return {"label": label, "applies": {"span_min_m": span_min, "span_max_m": span_max},
            "truck_scale": scale, "axles_kn": list(axles), "spacings_m": list(spacings),
            "uniform_kn_per_m": uniform}


def config(*variants, name="test"):
    return json.dumps({"name": name, "variants": list(variants)})


def test_single_truck_variant():
    m = load_model_config(config(variant()))
    assert m.name == "test" and len(m.variants) == 1
    assert m.variants[0].case.axle_loads == (100.0, 150.0, 150.0)


def test_dual_definition_like_cl625():
    m = load_model_config(config(variant("truck"), variant("lane", scale=0.8, uniform=9.0)))
    assert len(m.variants) == 2
    assert m.variants[1].case.truck_scale == 0.8


def test_coverage_gap_rejected():
    with pytest.raises(ModelConfigError, match="span-coverage gap"):
        load_model_config(config(variant(span_max=30.0)))
    with pytest.raises(ModelConfigError, match="span-coverage gap"):
        load_model_config(config(variant(span_max=30.0), variant(span_min=40.0)))
    # (.., 30] and (30, ..) meet exactly
    load_model_config(config(variant(span_max=30.0), variant(span_min=30.0, uniform=10.0)))


@pytest.mark.parametrize("bad", [
    config(variant(axles=(100.0, -5.0))),
    config(variant(axles=(100.0, 5.0), spacings=())),
    config(variant(uniform=-1.0)),
    config(variant(axles=(), spacings=(), uniform=0.0)),
    config(variant(spacings=(4.0, {"min": 9.0, "max": 4.3, "step": 0.1}))),
    json.dumps({"name": "x", "variants": []}),
    json.dumps({"variants": [variant()]}),
    "{not json",
    json.dumps({"name": "x", "variants": [variant(axles=("heavy", 1.0))]}),
])
def test_schema_violations(bad):
    with pytest.raises(ModelConfigError):
        load_model_config(bad)


def test_round_trip_config():
    m = load_model_config(config(variant(spacings=(4.3, {"min": 4.3, "max": 9.0, "step": 0.1})),
                                 variant("lane", uniform=9.3)))
    assert load_model_config(dump_model(m)) == m


def test_shipped_models_load():
    models = default_models()
    assert set(models) == set(DEFAULT_MODEL_FILES)
    hl93 = models["HL-93"]
    assert hl93.variants[0].case.axle_loads == (35.0, 145.0, 145.0)
    assert hl93.variants[0].case.uniform_load == 9.3
    cl = models["CL-625"]
    assert sum(cl.variants[0].case.axle_loads) == 625.0
    for path in map(default_model_path, DEFAULT_MODEL_FILES):
        assert "source" in json.loads(path.read_text())


def test_imt_geometry_switch_at_30m():
    m = default_model("IMT-66.5")
    short = resolve_cases(m, 20.0, BridgeGeometry(1, 20.0))
    long = resolve_cases(m, 40.0, BridgeGeometry(1, 40.0))
    assert all(c.uniform_load == 0 for c in short)
    assert any(c.uniform_load > 0 for c in long)
    assert resolve_cases(m, 30.0, BridgeGeometry(1, 30.0))[0].uniform_load == 0


def test_spacing_range_expansion():
    m = load_model_config(config(variant(axles=(35, 145, 145),
                                         spacings=(4.3, {"min": 4.3, "max": 9.0, "step": 0.1}))))
    cases = resolve_cases(m, 20.0, BridgeGeometry(2, 20.0))
    assert len(cases) == 48
    rear = [c.train.axle_spacings[1] for c in cases]
    assert rear[0] == 4.3 and rear[-1] == 9.0
    assert np.allclose(np.diff(rear), 0.1)
    assert all(c.uniform_extent == (0.0, 40.0) for c in cases)


def test_truck_scale_applied():
    m = load_model_config(config(variant(scale=0.8)))
    (c,) = resolve_cases(m, 10.0, BridgeGeometry(1, 10.0))
    assert c.train.axle_loads == pytest.approx((80.0, 120.0, 120.0))


def test_case_envelope_truck_only_equals_sweep():
    g = BridgeGeometry(2, 12.0)
    il = build_influence_line(g, 0)
    train = AxleTrain((100.0, 150.0), (4.0,))
    env = case_envelope(il, ConcreteCase("t", train, 0.0, (0.0, g.total_length)))
    assert env == sweep_envelope(il, train)


def test_case_envelope_uniform_only():
    il = build_influence_line(BridgeGeometry(1, 10.0), 0)
    env = case_envelope(il, ConcreteCase("lane", None, 9.0, (0.0, 10.0)))
    assert env.max_reaction == pytest.approx(45.0) and env.min_reaction == pytest.approx(45.0)


def test_case_envelope_axle_plus_lane():
    g = BridgeGeometry(2, 10.0)
    il = build_influence_line(g, 2)
    env = case_envelope(il, ConcreteCase("c", AxleTrain((100.0,)), 1.0, (0.0, 20.0)))
    # dense-grid oracle of the axle (1 mm) plus the exterior lane term 3 w L / 8
    xs = np.arange(0, 10001) * 1e-3
    oracle = 100 * three_moment_far_span(xs, 10.0).min() + 3 * 1.0 * 10.0 / 8
    assert env.min_reaction == pytest.approx(oracle, abs=1e-4)
    assert env.min_reaction == pytest.approx(-5.873, abs=1e-3)


def test_model_envelope_mixes_variants():
    g = BridgeGeometry(2, 20.0)
    il = build_influence_line(g, 1)
    m = load_model_config(config(variant("truck"), variant("truck+lane", uniform=9.0)))
    env = model_envelope(il, m, 20.0, g)
    train = AxleTrain((100.0, 150.0, 150.0), (4.0, 5.0))
    t_only = sweep_envelope(il, train)
    lane = uniform_reaction(il, 9.0, 0, 40)
    assert lane > 0
    assert env.max_reaction == pytest.approx(t_only.max_reaction + lane)
    assert env.min_reaction == pytest.approx(t_only.min_reaction)


def test_model_envelope_single_and_duplicate():
    g = BridgeGeometry(3, 15.0)
    il = build_influence_line(g, 1)
    one = load_model_config(config(variant()))
    two = load_model_config(config(variant(), variant()))
    (case,) = resolve_cases(one, 15.0, g)
    assert model_envelope(il, one, 15.0, g) == case_envelope(il, case)
    assert model_envelope(il, two, 15.0, g) == model_envelope(il, one, 15.0, g)


@pytest.mark.parametrize("name", sorted(DEFAULT_MODEL_FILES))
def test_linear_scaling(name):
    m = default_model(name)
    g = BridgeGeometry(2, 25.0)
    for k in range(3):
        il = build_influence_line(g, k)
        base = model_envelope(il, m, 25.0, g, SweepConfig(0.05))
        big = model_envelope(il, m.scaled(2.5), 25.0, g, SweepConfig(0.05))
        assert big.max_reaction == pytest.approx(2.5 * base.max_reaction, rel=1e-12, abs=1e-9)
        assert big.min_reaction == pytest.approx(2.5 * base.min_reaction, rel=1e-12, abs=1e-9)


def test_lane_shift_keeps_range():
    g = BridgeGeometry(3, 18.0)
    train = AxleTrain((50.0, 120.0, 120.0), (3.6, 1.2))
    for k in range(4):
        il = build_influence_line(g, k)
        a = case_envelope(il, ConcreteCase("t", train, 0.0, (0, g.total_length)))
        b = case_envelope(il, ConcreteCase("t", train, 9.0, (0, g.total_length)))
        assert b.max_reaction - b.min_reaction == pytest.approx(a.max_reaction - a.min_reaction)


def test_full_bridge_uniform_constant_everywhere():
    for n in (1, 2, 3, 4):
        g = BridgeGeometry(n, 11.0)
        for k in range(n + 1):
            il = build_influence_line(g, k)
            env = case_envelope(il, ConcreteCase("lane", None, 9.3, (0, g.total_length)))
            assert env.max_reaction == env.min_reaction == uniform_reaction(il, 9.3, 0, g.total_length)


def test_truck_only_captures_uplift():
    for L in (15.0, 30.0, 60.0):
        g = BridgeGeometry(2, L)
        m = default_model("CL-625")
        truck_only = load_model_config(config({**variant("truck", axles=m.variants[0].case.axle_loads,
                                                         spacings=m.variants[0].case.axle_spacings)}))
        env = model_envelope(build_influence_line(g, 0), truck_only, L, g)
        assert env.min_reaction < 0


def test_no_applicable_variant():
    m = load_model_config(config(variant(span_max=30.0), variant(span_min=30.0)))
    object.__setattr__(m, "variants", m.variants[:1])
    with pytest.raises(ModelConfigError):
        resolve_cases(m, 50.0, BridgeGeometry(1, 50.0))


def test_load_model_from_file(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(config(variant()))
    assert load_model(p).name == "test"
