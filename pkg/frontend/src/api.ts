/** Thin typed client for the hybridnet HTTP API. The fetch implementation is
 * injectable so tests can run without a server. */

import type {
  CountersDoc, FlowRequest, SimulateJob, SimulationResultDoc, TopologyDoc,
  ValidationReportDoc,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  code: string;
  subject: unknown;

  constructor(code: string, message: string, subject: unknown) {
    super(message);
    this.code = code;
    this.subject = subject;
  }
}

export class ApiClient {
  constructor(
    private base = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    const doc = await resp.json();
    if (!resp.ok) {
      throw new ApiError(doc.code ?? "HTTP_ERROR",
        doc.message ?? `HTTP ${resp.status}`, doc.subject);
    }
    return doc as T;
  }

  getTopology(): Promise<TopologyDoc> {
    return this.request("GET", "/api/topology");
  }

  putTopology(doc: TopologyDoc): Promise<{ ok: boolean }> {
    return this.request("PUT", "/api/topology", doc);
  }

  validate(doc?: TopologyDoc): Promise<ValidationReportDoc> {
    return this.request("POST", "/api/validate", doc ? { topology: doc } : {});
  }

  provision(serviceIds?: string[]): Promise<{ services: unknown[] }> {
    return this.request("POST", "/api/provision",
      serviceIds ? { serviceIds } : {});
  }

  teardown(serviceId: string): Promise<{ ok: boolean }> {
    return this.request("POST", `/api/teardown/${serviceId}`);
  }

  simulate(flows: FlowRequest[], opts: {
    seed?: number; background?: boolean; realtime?: boolean;
  } = {}): Promise<SimulationResultDoc | SimulateJob> {
    return this.request("POST", "/api/simulate", { flows, ...opts });
  }

  simulationStatus(job: string): Promise<SimulateJob> {
    return this.request("GET", `/api/simulate/${job}`);
  }

  counters(): Promise<CountersDoc> {
    return this.request("GET", "/api/counters");
  }

  results(experiment: string): Promise<unknown[]> {
    return this.request("GET", `/api/results/${experiment}`);
  }

  plan(): Promise<unknown> {
    return this.request("GET", "/api/plan");
  }
}
