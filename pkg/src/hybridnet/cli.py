"""Command-line entry point: thin adapters over the core modules plus the
embedded HTTP service.

Exit codes: 0 success, 1 validation violations, 2 missing input file,
3 schema error, 4 domain error, 5 usage error.
"""

import argparse
import json
import sys

from . import __version__
from .controller import Controller, verify_control_connectivity
from .costmodel import CostModel
from .deployplan import ResourcePool, build_plan
from .errors import HybridNetError, SchemaError
from .jsonutil import canonical_json, read_json
from .measure import ExperimentSpec, export_results, preset_specs, run_experiment
from .network import Network
from .scenario import TrafficSpec, run_scenario
from .topo import export_json, generate_random, import_json, validate

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_NOT_FOUND = 2
EXIT_SCHEMA = 3
EXIT_DOMAIN = 4
EXIT_USAGE = 5


def _load_json(path):
    try:
        return read_json(path)
    except FileNotFoundError:
        raise _Exit(EXIT_NOT_FOUND, f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise _Exit(EXIT_SCHEMA, f"not valid JSON: {path}: {exc}")


def _load_topology(path):
    return import_json(_load_json(path))


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def cmd_validate(args):
    topology = _load_topology(args.topology)
    report = validate(topology)
    out = canonical_json(report.to_doc())
    if args.out:
        _write(args.out, out)
    else:
        sys.stdout.write(out)
    return EXIT_OK if report.ok else EXIT_VIOLATIONS


def cmd_generate(args):
    topology = generate_random(args.core, args.pe, args.ce_per_pe,
                               args.extra_edge_prob, args.seed)
    _write(args.out, canonical_json(export_json(topology)))
    return EXIT_OK


def cmd_provision(args):
    topology = _load_topology(args.topology)
    network = Network(topology)
    controller = Controller(network)
    records = controller.provision_all()
    audit = {"services": [r.to_doc() for r in records]}
    _write(args.out, canonical_json(audit))
    return EXIT_OK


def cmd_simulate(args):
    topology = _load_topology(args.topology)
    traffic_doc = _load_json(args.traffic)
    cost_model = CostModel.default()
    if args.cost_model:
        cost_model = CostModel.from_doc(_load_json(args.cost_model))
    flows = [TrafficSpec.from_doc(d) for d in traffic_doc.get("flows", [])]
    network = Network(
        topology,
        cost_model=cost_model,
        tunneling=traffic_doc.get("tunneling", "none"),
        flow_cache=traffic_doc.get("flowCache"),
    )
    Controller(network).provision_all()
    result = run_scenario(network, flows, seed=args.seed,
                          sample_count=traffic_doc.get("sampleCount"))
    if args.format == "csv":
        nodes_csv, flows_csv = result.to_csv()
        _write(args.out + ".nodes.csv", nodes_csv)
        _write(args.out + ".flows.csv", flows_csv)
    else:
        _write(args.out, result.to_json())
    return EXIT_OK


def cmd_measure(args):
    if args.preset:
        specs = preset_specs(args.preset)
    else:
        doc = _load_json(args.experiment)
        docs = doc["experiments"] if isinstance(doc, dict) and "experiments" in doc \
            else [doc]
        specs = [ExperimentSpec.from_doc(d) for d in docs]
    records = []
    for spec in specs:
        records.extend(run_experiment(spec, topology_loader=_load_topology))
    _write(args.out, export_results(records, fmt=args.format))
    return EXIT_OK


def cmd_verify_control(args):
    topology = _load_topology(args.topology)
    network = Network(topology)
    report = verify_control_connectivity(network)
    out = canonical_json(report)
    if args.out:
        _write(args.out, out)
    else:
        sys.stdout.write(out)
    return EXIT_OK if report["ok"] else EXIT_VIOLATIONS


def cmd_deploy_plan(args):
    topology = _load_topology(args.topology)
    pool = ResourcePool.from_doc(_load_json(args.resources))
    overrides = {}
    if args.overrides:
        overrides = _load_json(args.overrides)
    plan = build_plan(topology, pool, overrides=overrides, kind=args.tunnel_kind)
    _write(args.out, plan.to_json())
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .api import build_app
    app = build_app(args.topology_dir)
    uvicorn.run(app, host=args.addr, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hybridnet",
        description="Hybrid IP/SDN network emulator, service controller and "
                    "experiment toolchain")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a topology file against the model rules")
    p.add_argument("--topology", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("generate", help="write a seeded random topology")
    p.add_argument("--core", type=int, required=True)
    p.add_argument("--pe", type=int, required=True)
    p.add_argument("--ce-per-pe", type=int, default=1)
    p.add_argument("--extra-edge-prob", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("provision", help="provision all services, write the audit")
    p.add_argument("--topology", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_provision)

    p = sub.add_parser("simulate", help="run a traffic scenario")
    p.add_argument("--topology", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--cost-model")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("measure", help="run an experiment file or preset")
    p.add_argument("--experiment")
    p.add_argument("--preset")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_measure)

    p = sub.add_parser("verify-control", help="check in-band control-plane reachability")
    p.add_argument("--topology", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_verify_control)

    p = sub.add_parser("deploy-plan", help="map nodes to VMs and plan the tunnel overlay")
    p.add_argument("--topology", required=True)
    p.add_argument("--resources", required=True)
    p.add_argument("--overrides")
    p.add_argument("--tunnel-kind", choices=("vxlan", "userspace"), default="vxlan")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_deploy_plan)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--addr", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--topology-dir", default=".")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "measure" and not (args.experiment or args.preset):
        parser.error("measure needs --experiment or --preset")
    try:
        return args.fn(args)
    except _Exit as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except SchemaError as exc:
        print(f"schema error at {exc.subject}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except HybridNetError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
