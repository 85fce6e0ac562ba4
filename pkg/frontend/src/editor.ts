/** Topology editor: view-scoped gestures over the client model with inline
 * legality checks. The checks mirror the server validator's violation codes
 * exactly, so a rejected gesture names the same code the backend would.
 * No provisioning or simulation logic lives here; the editor only shapes the
 * document the API consumes. */

import type {
  EndpointDoc, LinkDoc, LinkKind, NodeDoc, NodeKind, Position, ServiceDoc,
  ServiceKind, TopologyDoc, ViewName,
} from "./types.js";

// Violation codes shared with the server validator.
export const ACCESS_LINK_NOT_PE = "ACCESS_LINK_NOT_PE";
export const CORE_LINK_BAD_ENDPOINT = "CORE_LINK_BAD_ENDPOINT";
export const CE_LINK_COUNT = "CE_LINK_COUNT";
export const CONTROLLER_HAS_LINKS = "CONTROLLER_HAS_LINKS";
export const DUPLICATE_NODE_ID = "DUPLICATE_NODE_ID";
export const BAD_ASSIGNMENT_SUBJECT = "BAD_ASSIGNMENT_SUBJECT";
export const SERVICE_ENDPOINT_COUNT = "SERVICE_ENDPOINT_COUNT";
export const ENDPOINT_NOT_ACCESS_PORT = "ENDPOINT_NOT_ACCESS_PORT";
export const DUPLICATE_ENDPOINT_CLAIM = "DUPLICATE_ENDPOINT_CLAIM";
export const BAD_VLAN = "BAD_VLAN";

export type GestureResult<T = undefined> =
  | { ok: true; value: T }
  | { ok: false; code: string; message: string };

function reject<T>(code: string, message: string): GestureResult<T> {
  return { ok: false, code, message };
}

function accept<T>(value: T): GestureResult<T> {
  return { ok: true, value };
}

export const VIEWS: ViewName[] = [
  "dataPlane", "controlPlane", "serviceVll", "servicePw", "serviceVss",
];

/** Node palette available in each view. */
export const VIEW_PALETTE: Record<ViewName, NodeKind[]> = {
  dataPlane: ["CoreRouter", "ProviderEdge", "CustomerEdge"],
  controlPlane: ["Controller"],
  serviceVll: [],
  servicePw: [],
  serviceVss: [],
};

export const SERVICE_VIEW_KIND: Partial<Record<ViewName, ServiceKind>> = {
  serviceVll: "IpVll",
  servicePw: "Pw",
  serviceVss: "Vss",
};

const ID_PREFIX: Record<NodeKind, string> = {
  CoreRouter: "cr",
  ProviderEdge: "pe",
  CustomerEdge: "ce",
  Controller: "ctrl",
};

const SERVICE_PREFIX: Record<ServiceKind, string> = {
  IpVll: "v",
  Pw: "p",
  Vss: "s",
};

export class TopologyEditor {
  modelName = "model";
  nodes: NodeDoc[] = [];
  links: LinkDoc[] = [];
  controllerAssignment: Record<string, string> = {};
  services: ServiceDoc[] = [];
  extensions: Record<string, unknown> = {};

  activeView: ViewName = "dataPlane";
  selection: string[] = [];
  /** Canvas positions; persisted across view switches and exported under
   * the "layout" extension key. */
  positions: Record<string, Position> = {};

  private nextPort: Record<string, number> = {};
  private linkSeq = 0;

  // -- lookups ---------------------------------------------------------------

  node(id: string): NodeDoc | undefined {
    return this.nodes.find((n) => n.id === id);
  }

  linkCount(id: string): number {
    return this.links.filter((l) => l.a.node === id || l.b.node === id).length;
  }

  accessPorts(peId: string): string[] {
    const ports: string[] = [];
    for (const l of this.links) {
      if (l.kind !== "access") continue;
      if (l.a.node === peId) ports.push(l.a.port);
      if (l.b.node === peId) ports.push(l.b.port);
    }
    return ports.sort((x, y) => x.length - y.length || x.localeCompare(y));
  }

  claims(): Map<string, string> {
    const out = new Map<string, string>();
    for (const s of this.services) {
      for (const e of s.endpoints) {
        out.set(`${e.pe}/${e.port}/${e.vlan}`, s.id);
      }
    }
    return out;
  }

  // -- view handling -----------------------------------------------------------

  setView(view: ViewName): void {
    this.activeView = view;
    this.selection = [];
  }

  // -- gestures -----------------------------------------------------------------

  addNode(kind: NodeKind, at?: Position, id?: string): GestureResult<string> {
    const palette = VIEW_PALETTE[this.activeView];
    if (!palette.includes(kind)) {
      return reject("KIND_NOT_IN_VIEW",
        `${kind} cannot be placed in the ${this.activeView} view`);
    }
    const nodeId = id ?? this.freshNodeId(kind);
    if (this.node(nodeId)) {
      return reject(DUPLICATE_NODE_ID, `node id ${nodeId} already exists`);
    }
    this.nodes.push({
      id: nodeId, kind, label: nodeId, loopback: null, interfaceMacs: {},
    });
    if (at) this.positions[nodeId] = { ...at };
    return accept(nodeId);
  }

  /** Connect two nodes; link kind and ports are derived. Illegal connections
   * are rejected with the validator's code. */
  connect(aId: string, bId: string): GestureResult<string> {
    const a = this.node(aId);
    const b = this.node(bId);
    if (!a || !b) return reject("UNKNOWN_NODE", "both endpoints must exist");
    for (const n of [a, b]) {
      if (n.kind === "Controller") {
        return reject(CONTROLLER_HAS_LINKS,
          "controllers take no data-plane links (assign them in the control-plane view)");
      }
    }
    const ceEnds = [a, b].filter((n) => n.kind === "CustomerEdge");
    let kind: LinkKind = "core";
    if (ceEnds.length > 0) {
      const other = a.kind === "CustomerEdge" ? b : a;
      if (ceEnds.length === 2 || other.kind !== "ProviderEdge") {
        return reject(ACCESS_LINK_NOT_PE,
          "a CustomerEdge may only connect to a ProviderEdge");
      }
      kind = "access";
      for (const ce of ceEnds) {
        if (this.linkCount(ce.id) >= 1) {
          return reject(CE_LINK_COUNT,
            `${ce.id} already has its single access link`);
        }
      }
    }
    this.linkSeq += 1;
    const link: LinkDoc = {
      id: `l${this.linkSeq}`,
      a: { node: aId, port: this.takePort(aId) },
      b: { node: bId, port: this.takePort(bId) },
      kind,
      costMetric: 1,
    };
    this.links.push(link);
    return accept(link.id);
  }

  removeNode(id: string): GestureResult<undefined> {
    const node = this.node(id);
    if (!node) return reject("UNKNOWN_NODE", `no node ${id}`);
    this.links = this.links.filter((l) => l.a.node !== id && l.b.node !== id);
    this.nodes = this.nodes.filter((n) => n.id !== id);
    delete this.controllerAssignment[id];
    delete this.positions[id];
    this.services = this.services.filter(
      (s) => !s.endpoints.some((e) => e.pe === id));
    return accept(undefined);
  }

  assignController(nodeId: string, controllerId: string): GestureResult<undefined> {
    const node = this.node(nodeId);
    if (!node || (node.kind !== "CoreRouter" && node.kind !== "ProviderEdge")) {
      return reject(BAD_ASSIGNMENT_SUBJECT,
        "only CoreRouter/ProviderEdge nodes take a controller assignment");
    }
    this.controllerAssignment[nodeId] = controllerId;
    return accept(undefined);
  }

  assignAll(controllerId: string): void {
    for (const n of this.nodes) {
      if (n.kind === "CoreRouter" || n.kind === "ProviderEdge") {
        this.controllerAssignment[n.id] = controllerId;
      }
    }
  }

  /** Validate one service endpoint pick in a service view. */
  checkEndpoint(ep: EndpointDoc): GestureResult<undefined> {
    const pe = this.node(ep.pe);
    if (!pe || pe.kind !== "ProviderEdge" ||
        !this.accessPorts(ep.pe).includes(ep.port)) {
      return reject(ENDPOINT_NOT_ACCESS_PORT,
        `${ep.pe}/${ep.port} is not a ProviderEdge access port`);
    }
    if (ep.vlan !== null && (ep.vlan < 1 || ep.vlan > 4094)) {
      return reject(BAD_VLAN, `vlan ${ep.vlan} outside 1-4094`);
    }
    const key = `${ep.pe}/${ep.port}/${ep.vlan}`;
    const owner = this.claims().get(key);
    if (owner !== undefined) {
      return reject(DUPLICATE_ENDPOINT_CLAIM,
        `endpoint already claimed by service ${owner}`);
    }
    return accept(undefined);
  }

  addService(kind: ServiceKind, endpoints: EndpointDoc[],
             options: Record<string, unknown> = {},
             id?: string): GestureResult<string> {
    const wanted = kind === "Vss" ? 2 : 2;
    if (kind === "Vss" ? endpoints.length < wanted : endpoints.length !== wanted) {
      return reject(SERVICE_ENDPOINT_COUNT,
        kind === "Vss" ? "a virtual switch needs at least 2 endpoints"
          : `${kind} needs exactly 2 endpoints`);
    }
    const seen = new Set<string>();
    for (const ep of endpoints) {
      const check = this.checkEndpoint(ep);
      if (!check.ok) return check as GestureResult<string>;
      const key = `${ep.pe}/${ep.port}/${ep.vlan}`;
      if (seen.has(key)) {
        return reject(DUPLICATE_ENDPOINT_CLAIM, "endpoint picked twice");
      }
      seen.add(key);
    }
    const serviceId = id ?? this.freshServiceId(kind);
    this.services.push({ id: serviceId, kind, endpoints, options });
    return accept(serviceId);
  }

  removeService(id: string): GestureResult<undefined> {
    const before = this.services.length;
    this.services = this.services.filter((s) => s.id !== id);
    return before === this.services.length
      ? reject("UNKNOWN_SERVICE", `no service ${id}`)
      : accept(undefined);
  }

  moveNode(id: string, to: Position): void {
    this.positions[id] = { ...to };
  }

  // -- document I/O ------------------------------------------------------------

  export(): TopologyDoc {
    const doc: TopologyDoc = {
      schemaVersion: 1,
      modelName: this.modelName,
      nodes: this.nodes.map((n) => ({ ...n, interfaceMacs: { ...n.interfaceMacs } })),
      links: this.links.map((l) => ({ ...l, a: { ...l.a }, b: { ...l.b } })),
      controllerAssignment: { ...this.controllerAssignment },
      services: this.services.map((s) => ({
        ...s,
        endpoints: s.endpoints.map((e) => ({ ...e })),
        options: { ...s.options },
      })),
      ...this.extensions,
    };
    if (Object.keys(this.positions).length > 0) {
      doc["layout"] = Object.fromEntries(
        Object.keys(this.positions).sort().map((k) => [k, this.positions[k]]));
    }
    return doc;
  }

  import(doc: TopologyDoc): void {
    this.modelName = doc.modelName;
    this.nodes = doc.nodes.map((n) => ({ ...n }));
    this.links = doc.links.map((l) => ({ ...l, a: { ...l.a }, b: { ...l.b } }));
    this.controllerAssignment = { ...doc.controllerAssignment };
    this.services = doc.services.map((s) => ({
      ...s, endpoints: s.endpoints.map((e) => ({ ...e })),
    }));
    this.positions = {};
    this.extensions = {};
    for (const key of Object.keys(doc)) {
      if (["schemaVersion", "modelName", "nodes", "links",
           "controllerAssignment", "services"].includes(key)) continue;
      if (key === "layout") {
        this.positions = { ...(doc["layout"] as Record<string, Position>) };
      } else {
        this.extensions[key] = doc[key];
      }
    }
    this.nextPort = {};
    for (const l of this.links) {
      for (const end of [l.a, l.b]) {
        const used = parseInt(end.port, 10);
        if (!Number.isNaN(used)) {
          this.nextPort[end.node] = Math.max(this.nextPort[end.node] ?? 0, used);
        }
      }
    }
    this.linkSeq = this.links.length;
    this.selection = [];
  }

  // -- id/port allocation -------------------------------------------------------

  private freshNodeId(kind: NodeKind): string {
    const prefix = ID_PREFIX[kind];
    let n = 1;
    while (this.node(`${prefix}${n}`)) n += 1;
    return `${prefix}${n}`;
  }

  private freshServiceId(kind: ServiceKind): string {
    const prefix = SERVICE_PREFIX[kind];
    let n = 1;
    while (this.services.some((s) => s.id === `${prefix}${n}`)) n += 1;
    return `${prefix}${n}`;
  }

  private takePort(nodeId: string): string {
    const next = (this.nextPort[nodeId] ?? 0) + 1;
    this.nextPort[nodeId] = next;
    return String(next);
  }
}
