/** Wire types mirroring the server's topology and API documents. */

export type NodeKind = "CoreRouter" | "ProviderEdge" | "CustomerEdge" | "Controller";
export type LinkKind = "core" | "access";
export type ServiceKind = "IpVll" | "Pw" | "Vss";

export interface NodeDoc {
  id: string;
  kind: NodeKind;
  label: string;
  loopback: string | null;
  interfaceMacs: Record<string, string>;
}

export interface LinkEnd {
  node: string;
  port: string;
}

export interface LinkDoc {
  id: string;
  a: LinkEnd;
  b: LinkEnd;
  kind: LinkKind;
  costMetric: number;
}

export interface EndpointDoc {
  pe: string;
  port: string;
  vlan: number | null;
}

export interface ServiceDoc {
  id: string;
  kind: ServiceKind;
  endpoints: EndpointDoc[];
  options: Record<string, unknown>;
}

export interface TopologyDoc {
  schemaVersion: number;
  modelName: string;
  nodes: NodeDoc[];
  links: LinkDoc[];
  controllerAssignment: Record<string, string>;
  services: ServiceDoc[];
  /** Unknown top-level keys (e.g. the UI's own "layout") round-trip untouched. */
  [extension: string]: unknown;
}

export interface Violation {
  code: string;
  subject: string;
  message: string;
}

export interface ValidationReportDoc {
  ok: boolean;
  violations: Violation[];
}

export interface RuleDoc {
  ruleId: string;
  tableId: number;
  priority: number;
  match: Record<string, unknown>;
  actions: unknown[][];
  packets: number;
  bytes: number;
}

export interface NodeCountersDoc {
  nodeId: string;
  kind: string;
  packets: number;
  bytes: number;
  cost: number;
  maxPacketCost: number;
  rules: RuleDoc[];
}

export interface CountersDoc {
  nodes: NodeCountersDoc[];
  services: ServiceAuditDoc[];
}

export interface ServiceAuditDoc {
  serviceId: string;
  kind: string;
  sbps: Array<{
    sbpId: string;
    direction: string;
    path: Array<[string, string | null, string | null]>;
    labels: Record<string, number>;
  }>;
}

export interface FlowResultDoc {
  flowId: string;
  injected: number;
  delivered: number;
  dropped: number;
  extraCopies: number;
  reasonHistogram: Record<string, number>;
}

export interface SimulationResultDoc {
  durationS: number;
  seed: number;
  totals: { injected: number; delivered: number; dropped: number };
  nodes: Array<{
    nodeId: string;
    packets: number;
    bytes: number;
    cpuLoad: number;
    saturationEstimate: number | null;
  }>;
  flows: FlowResultDoc[];
}

export interface FlowRequest {
  flowId: string;
  ratePps: number;
  pktBytes: number;
  durationS: number;
  srcCe?: string;
  dstCe?: string;
  service?: string;
  srcEndpoint?: number;
  dstEndpoint?: number;
  broadcast?: boolean;
}

export interface SimulateJob {
  job: string;
  status: "running" | "done" | "error";
  result?: SimulationResultDoc | null;
}

export type ViewName =
  | "dataPlane"
  | "controlPlane"
  | "serviceVll"
  | "servicePw"
  | "serviceVss";

export interface Position {
  x: number;
  y: number;
}
