"""CLI adapters: exit codes, file I/O, golden equivalence with direct calls."""

import json

import pytest

from conftest import make_chain
from hybridnet.cli import main
from hybridnet.controller import Controller
from hybridnet.jsonutil import canonical_json, read_json
from hybridnet.network import Network
from hybridnet.topo import export_json, generate_random, validate


def write(path, doc):
    path.write_text(canonical_json(doc), encoding="utf-8")
    return str(path)


def test_validate_ok_and_violations(tmp_path, capsys):
    good = write(tmp_path / "good.json", export_json(make_chain(vll=True)))
    assert main(["validate", "--topology", good]) == 0
    broken = make_chain(vll=True)
    broken.links.pop(0)
    bad = write(tmp_path / "bad.json", export_json(broken))
    assert main(["validate", "--topology", bad]) == 1
    out = capsys.readouterr().out
    assert "CORE_DISCONNECTED" in out


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["validate", "--topology", str(tmp_path / "nope.json")]) == 2


def test_schema_error_exit_code(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text('{"schemaVersion": 1}', encoding="utf-8")
    assert main(["validate", "--topology", str(p)]) == 3


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["generate", "--core", "3", "--pe", "3", "--ce-per-pe", "1",
            "--extra-edge-prob", "0.3", "--seed", "5"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    # golden equivalence with the direct call
    direct = canonical_json(export_json(generate_random(3, 3, 1, 0.3, 5)))
    assert a.read_text(encoding="utf-8") == direct


def test_provision_audit_matches_direct(tmp_path):
    topo = make_chain(n_core=1, vll=True, pw=False)
    tfile = write(tmp_path / "t.json", export_json(topo))
    out = tmp_path / "audit.json"
    assert main(["provision", "--topology", tfile, "--out", str(out)]) == 0
    audit = read_json(out)

    net = Network(make_chain(n_core=1, vll=True, pw=False))
    records = Controller(net).provision_all()
    direct = {"services": [r.to_doc() for r in records]}
    assert audit == json.loads(canonical_json(direct))


def test_simulate_same_seed_identical_outputs(tmp_path):
    topo = write(tmp_path / "t.json", export_json(make_chain(vll=True)))
    traffic = write(tmp_path / "traffic.json", {
        "flows": [{"flowId": "f1", "ratePps": 500, "pktBytes": 600,
                   "durationS": 1.0, "service": "v1"}]})
    outs = []
    for name in ("r1.json", "r2.json"):
        out = tmp_path / name
        assert main(["simulate", "--topology", topo, "--traffic", traffic,
                     "--seed", "3", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert doc["totals"]["injected"] == doc["totals"]["delivered"] == 500


def test_simulate_csv_outputs(tmp_path):
    topo = write(tmp_path / "t.json", export_json(make_chain(vll=True)))
    traffic = write(tmp_path / "traffic.json", {
        "flows": [{"flowId": "f1", "ratePps": 100, "pktBytes": 400,
                   "durationS": 0.5, "service": "v1"}]})
    out = tmp_path / "res"
    assert main(["simulate", "--topology", topo, "--traffic", traffic,
                 "--seed", "1", "--format", "csv", "--out", str(out)]) == 0
    nodes = (tmp_path / "res.nodes.csv").read_text(encoding="utf-8")
    flows = (tmp_path / "res.flows.csv").read_text(encoding="utf-8")
    assert nodes.startswith("nodeId,pkts,bytes,cpuLoad,saturationEstimate")
    assert flows.startswith("flowId,injected,delivered,dropped,reasonHistogram")
    assert "f1,50,50,0," in flows


def test_measure_best_effort_ratio_inputs(tmp_path):
    exp = write(tmp_path / "exp.json", {"experiments": [
        {"name": "router-ip", "scenario": {"mode": "routerIp", "tunneling": "none"},
         "rates": [500, 2500], "runs": 1, "samplesPerRun": 4, "discardPrefix": 1,
         "durationSeconds": 0.2},
        {"name": "hybrid-ip", "scenario": {"mode": "oshiIp", "tunneling": "none"},
         "rates": [500, 2500], "runs": 1, "samplesPerRun": 4, "discardPrefix": 1,
         "durationSeconds": 0.2},
    ]})
    out = tmp_path / "records.json"
    assert main(["measure", "--experiment", exp, "--out", str(out)]) == 0
    records = read_json(out)
    by_key = {(r["experiment"], r["rate"], r["node"]): r["meanCpuLoad"]
              for r in records}
    for rate in (500, 2500):
        ratio = by_key[("hybrid-ip", rate, "pe1")] / by_key[("router-ip", rate, "pe1")]
        assert 1.11 <= ratio <= 1.19


def test_measure_preset_runs(tmp_path):
    out = tmp_path / "preset.csv"
    assert main(["measure", "--preset", "pw-penalty", "--format", "csv",
                 "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert text.startswith("experiment,rate,node,")
    assert "vll," in text and "pw," in text


def test_deploy_plan_cli(tmp_path):
    topo = write(tmp_path / "t.json", export_json(make_chain()))
    pool = write(tmp_path / "pool.json",
                 [{"vmId": f"vm{i}", "mgmtAddress": f"10.99.0.{i}", "server": "s1"}
                  for i in range(1, 6)])
    out = tmp_path / "plan.json"
    assert main(["deploy-plan", "--topology", topo, "--resources", pool,
                 "--out", str(out)]) == 0
    plan = read_json(out)
    assert len(plan["tunnels"]) == 4
    vnis = [t["vni"] for t in plan["tunnels"]]
    assert len(set(vnis)) == len(vnis)


def test_verify_control_cli(tmp_path, capsys):
    topo = write(tmp_path / "t.json", export_json(make_chain()))
    assert main(["verify-control", "--topology", topo]) == 0
    out = capsys.readouterr().out
    assert '"ok": true' in out


def test_domain_error_exit_code(tmp_path):
    # provisioning a service onto a conflicting claim is a domain error
    topo = make_chain(vll=True)
    topo.services.append(topo.services[0])
    # duplicate service id fails validation at Network construction
    tfile = write(tmp_path / "t.json", export_json(topo))
    assert main(["provision", "--topology", tfile,
                 "--out", str(tmp_path / "a.json")]) == 4
