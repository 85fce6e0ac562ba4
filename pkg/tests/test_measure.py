"""Measurement protocol: the sampling statistic, saturation math, experiment
runner, and exports."""

import pytest

from hybridnet.costmodel import CostModel
from hybridnet.errors import InvalidArgument
from hybridnet.measure import (ExperimentSpec, MeasurementRecord, chain_topology,
                               export_results, import_results, per_packet_cost,
                               preset_specs, run_experiment, sample_statistic,
                               saturation_rate)
from hybridnet.topo import validate

CM = CostModel.default()


def test_sample_statistic_exact():
    assert sample_statistic(list(range(1, 21)), 10) == 15.5


def test_sample_statistic_constant():
    assert sample_statistic([4.2] * 7, 2) == 4.2


def test_sample_statistic_too_few():
    with pytest.raises(InvalidArgument):
        sample_statistic([1.0, 2.0], 2)


def test_sample_statistic_equivariance():
    xs = [3.0, 1.0, 7.0, 2.0, 9.0, 4.0]
    m = sample_statistic(xs, 2)
    assert sample_statistic([5 * x + 11 for x in xs], 2) == pytest.approx(5 * m + 11)


def test_saturation_anchor_rates():
    assert saturation_rate(CM, "routerIp") == pytest.approx(14000.0)
    assert saturation_rate(CM, "oshiIp") == pytest.approx(12500.0)
    assert saturation_rate(CM, "oshiIp", "openvpn") == pytest.approx(3500.0)
    vx = saturation_rate(CM, "oshiIp", "vxlan")
    assert vx / 12500.0 == pytest.approx(0.92)


def test_router_loses_advantage_under_tunnel():
    assert per_packet_cost(CM, "routerIp", "vxlan") == pytest.approx(
        per_packet_cost(CM, "oshiIp", "vxlan"))


def test_saturation_monotone_in_contributing_constants():
    base = saturation_rate(CM, "oshiPw")
    doc = CM.to_doc()
    for key in ("cOfcsLookup", "cMplsOp", "cAceGre"):
        bumped = dict(doc)
        bumped[key] = doc[key] * 1.5
        assert saturation_rate(CostModel.from_doc(bumped), "oshiPw") < base


def test_chain_topology_valid():
    assert validate(chain_topology()).ok


def quick_spec(**kw):
    base = dict(name="t", mode="oshiIp", rates=[1000], runs=2,
                samples_per_run=4, discard_prefix=1, duration_s=0.2)
    base.update(kw)
    return ExperimentSpec(**base)


def test_deterministic_cost_model_means_zero_ci():
    records = run_experiment(quick_spec())
    assert records
    for r in records:
        assert r.ci95_halfwidth == 0.0
        assert len(set(r.per_run_means)) == 1
        assert r.mean_cpu_load == pytest.approx(sum(r.per_run_means) / len(r.per_run_means))


def test_router_ip_saturates_at_anchor_rate():
    records = run_experiment(quick_spec(mode="routerIp", rates=[14000],
                                        runs=1, duration_s=0.2))
    pe = next(r for r in records if r.node == "pe1")
    assert pe.mean_cpu_load == pytest.approx(1.0, rel=0.01)


def test_hybrid_vs_router_ratio_in_band():
    rates = [500, 1500, 2500]
    hybrid = run_experiment(quick_spec(mode="oshiIp", rates=rates, runs=1))
    router = run_experiment(quick_spec(name="r", mode="routerIp", rates=rates, runs=1))
    for rate in rates:
        h = next(r for r in hybrid if r.rate == rate and r.node == "pe1")
        p = next(r for r in router if r.rate == rate and r.node == "pe1")
        assert 1.11 <= h.mean_cpu_load / p.mean_cpu_load <= 1.19


def test_monitored_defaults_to_pe_and_first_cr():
    records = run_experiment(quick_spec(runs=1))
    assert {r.node for r in records} == {"pe1", "cr1"}


def test_experiment_spec_round_trip():
    spec = quick_spec(tunneling="vxlan", flow_cache="on")
    again = ExperimentSpec.from_doc(spec.to_doc())
    # flowCache only appears in the doc when set
    assert again.tunneling == "vxlan"
    assert spec.to_doc()["flowCache"] == "on"


def test_spec_field_guards():
    with pytest.raises(InvalidArgument):
        ExperimentSpec(name="x", mode="oshiIp", samples_per_run=5, discard_prefix=5)
    with pytest.raises(InvalidArgument):
        ExperimentSpec(name="x", mode="oshiIp", runs=0)


def test_export_csv_stable_and_sorted():
    records = [
        MeasurementRecord("b", 100, "pe1", 0.5, 0.0, [0.5]),
        MeasurementRecord("a", 200, "cr1", 0.25, 0.0, [0.25]),
        MeasurementRecord("a", 100, "pe1", 0.125, 0.0, [0.125]),
    ]
    csv = export_results(records, fmt="csv")
    lines = csv.strip().split("\n")
    assert lines[0] == "experiment,rate,node,meanCpuLoad,ci95Halfwidth"
    assert lines[1].startswith("a,100,")
    assert lines[2].startswith("a,200,")
    assert lines[3].startswith("b,100,")
    assert export_results(records, fmt="csv") == csv


def test_export_empty_is_header_only():
    assert export_results([], fmt="csv") == \
        "experiment,rate,node,meanCpuLoad,ci95Halfwidth\n"


def test_json_round_trip_preserves_values():
    import json
    records = [MeasurementRecord("a", 100, "pe1", 0.07516071428, 0.0,
                                 [0.07516071428])]
    doc = json.loads(export_results(records, fmt="json"))
    back = import_results(doc)
    assert back[0].mean_cpu_load == records[0].mean_cpu_load


def test_presets_parse():
    for name in ("best-effort-comparison", "tunneling-comparison",
                 "forwarding-modes", "pw-penalty", "flow-cache"):
        specs = preset_specs(name)
        assert specs
    pw = preset_specs("pw-penalty")
    assert pw[0].samples_per_run == 7
    assert pw[0].discard_prefix == 2
    assert pw[0].runs == 1
