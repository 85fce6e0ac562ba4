"""HTTP API for scripts and the topology-designer UI.

The service hosts one network session at a time: PUT a topology, provision
its services, run simulations, and poll live counters. Mutations serialize on
a session lock (single writer); counter reads are lock-free snapshots so a
client can poll while a simulation runs in the background.
"""

import threading
import uuid
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .controller import Controller
from .costmodel import CostModel
from .deployplan import ResourcePool, build_plan
from .errors import HybridNetError, SchemaError, UnknownService
from .jsonutil import read_json, write_json
from .measure import import_results
from .network import Network
from .scenario import TrafficSpec, run_scenario
from .topo import export_json, import_json, validate

TOPOLOGY_FILE = "current.topology.json"
POOL_FILE = "topology-to-testbed.json"


class ValidateRequest(BaseModel):
    topology: Optional[dict] = None


class ProvisionRequest(BaseModel):
    serviceIds: Optional[list] = None


class FlowModel(BaseModel):
    flowId: str
    ratePps: float
    pktBytes: int = 1000
    durationS: float = 1.0
    srcCe: Optional[str] = None
    dstCe: Optional[str] = None
    service: Optional[str] = None
    srcEndpoint: int = 0
    dstEndpoint: int = 1
    broadcast: bool = False


class SimulateRequest(BaseModel):
    flows: list[FlowModel]
    seed: int = 0
    tunneling: str = "none"
    flowCache: Optional[str] = None
    costModel: Optional[dict] = None
    sampleCount: Optional[int] = None
    background: bool = Field(default=False, description="return a job id immediately")
    realtime: bool = Field(default=False, description="pace ticks to wall clock")


class ErrorBody(BaseModel):
    code: str
    message: str
    subject: Optional[Any] = None


class Session:
    """One hosted topology with its (lazily built) network and controller."""

    def __init__(self, topology_dir):
        self.dir = Path(topology_dir)
        self.lock = threading.RLock()
        self.topology = None
        self.network = None
        self.controller = None
        self.jobs = {}
        stored = self.dir / TOPOLOGY_FILE
        if stored.exists():
            self.topology = import_json(read_json(stored))

    def require_topology(self):
        if self.topology is None:
            raise HybridNetError("no topology loaded", subject="session",
                                 code="NO_TOPOLOGY")
        return self.topology

    def require_network(self, **build_kwargs):
        if self.network is None or build_kwargs:
            self.network = Network(self.require_topology(), **build_kwargs)
            self.controller = Controller(self.network)
        return self.network

    def reset(self, topology):
        self.topology = topology
        self.network = None
        self.controller = None
        self.jobs = {}


def build_app(topology_dir="."):
    app = FastAPI(title="hybridnet", version="0.1.0")
    session = Session(topology_dir)
    app.state.session = session

    @app.exception_handler(HybridNetError)
    async def _domain_error(_request, exc: HybridNetError):
        status = 404 if isinstance(exc, UnknownService) or exc.code == "NO_TOPOLOGY" \
            else 422 if isinstance(exc, SchemaError) else 400
        return JSONResponse(status_code=status, content=exc.to_doc())

    @app.get("/api/topology")
    def get_topology():
        return export_json(session.require_topology())

    @app.put("/api/topology")
    def put_topology(doc: dict):
        topology = import_json(doc)
        with session.lock:
            session.reset(topology)
            write_json(session.dir / TOPOLOGY_FILE, export_json(topology))
        return {"ok": True, "modelName": topology.model_name}

    @app.post("/api/validate")
    def post_validate(body: ValidateRequest | None = None):
        if body and body.topology is not None:
            topology = import_json(body.topology)
        else:
            topology = session.require_topology()
        return validate(topology).to_doc()

    @app.post("/api/provision")
    def post_provision(body: ProvisionRequest | None = None):
        with session.lock:
            network = session.require_network()
            controller = session.controller
            topology = session.topology
            wanted = body.serviceIds if body and body.serviceIds else \
                [s.id for s in topology.services]
            records = []
            for service_id in wanted:
                service = topology.service(service_id)
                if service is None:
                    raise UnknownService(f"service {service_id!r} not in topology",
                                         subject=service_id)
                if service_id in network.provisioned:
                    records.append(network.provisioned[service_id])
                    continue
                records.append(controller.provision(service))
            return {"services": [r.to_doc() for r in records]}

    @app.post("/api/teardown/{service_id}")
    def post_teardown(service_id: str):
        with session.lock:
            session.require_network()
            session.controller.teardown(service_id)
        return {"ok": True, "serviceId": service_id}

    def _run_simulation(req: SimulateRequest):
        network = session.network
        flows = [TrafficSpec(
            flow_id=f.flowId, rate_pps=f.ratePps, pkt_bytes=f.pktBytes,
            duration_s=f.durationS, src_ce=f.srcCe, dst_ce=f.dstCe,
            service_id=f.service, src_endpoint=f.srcEndpoint,
            dst_endpoint=f.dstEndpoint, broadcast=f.broadcast) for f in req.flows]
        return run_scenario(network, flows, seed=req.seed,
                            sample_count=req.sampleCount, realtime=req.realtime)

    @app.post("/api/simulate")
    def post_simulate(req: SimulateRequest):
        with session.lock:
            network = session.require_network()
            network.tunneling = req.tunneling
            network.flow_cache_mode = req.flowCache
            if req.costModel:
                network.cost_model = CostModel.from_doc(req.costModel)
        if not req.background:
            with session.lock:
                return _run_simulation(req).to_doc()
        job_id = uuid.uuid4().hex[:12]
        session.jobs[job_id] = {"status": "running", "result": None}

        def worker():
            with session.lock:
                try:
                    result = _run_simulation(req)
                    session.jobs[job_id] = {"status": "done", "result": result.to_doc()}
                except HybridNetError as exc:
                    session.jobs[job_id] = {"status": "error", "result": exc.to_doc()}

        threading.Thread(target=worker, daemon=True).start()
        return {"job": job_id, "status": "running"}

    @app.get("/api/simulate/{job_id}")
    def get_simulation(job_id: str):
        job = session.jobs.get(job_id)
        if job is None:
            raise UnknownService(f"no such job {job_id!r}", subject=job_id)
        return {"job": job_id, "status": job["status"], "result": job["result"]}

    @app.get("/api/counters")
    def get_counters():
        network = session.network
        if network is None:
            return {"nodes": [], "services": []}
        nodes = []
        for node_id in sorted(network.nodes):
            node = network.nodes[node_id]
            doc = node.counters.to_doc()
            doc["nodeId"] = node_id
            doc["kind"] = node.kind
            doc["rules"] = [r.to_doc() for r in node.table0.rules] + \
                           [r.to_doc() for r in node.table1.rules]
            nodes.append(doc)
        services = [network.provisioned[s].to_doc() for s in sorted(network.provisioned)]
        return {"nodes": nodes, "services": services}

    @app.get("/api/results/{experiment}")
    def get_results(experiment: str):
        path = session.dir / f"{experiment}.results.json"
        if not path.exists():
            raise UnknownService(f"no results for {experiment!r}", subject=experiment)
        doc = read_json(path)
        # round-trip through the record type to guarantee the schema
        return [r.to_doc() for r in import_results(doc)]

    @app.get("/api/plan")
    def get_plan():
        topology = session.require_topology()
        pool_path = session.dir / POOL_FILE
        if pool_path.exists():
            pool = ResourcePool.from_doc(read_json(pool_path))
        else:
            pool = ResourcePool.synthetic(len(topology.nodes))
        return build_plan(topology, pool).to_doc()

    return app
