/** Deploy-and-direct: push the designed topology to the server, provision its
 * services, start a background simulation, and poll live counters at 1 Hz.
 * Every number shown comes from the API; the client computes nothing itself. */

import type { ApiClient } from "./api.js";
import type {
  CountersDoc, FlowRequest, SimulateJob, SimulationResultDoc, TopologyDoc,
} from "./types.js";

export interface SessionCallbacks {
  onCounters?: (counters: CountersDoc) => void;
  onDone?: (result: SimulationResultDoc) => void;
  onError?: (err: unknown) => void;
}

export interface TimerHooks {
  setInterval: (fn: () => void, ms: number) => unknown;
  clearInterval: (handle: unknown) => void;
}

const POLL_INTERVAL_MS = 1000;

export class DirectSession {
  private pollHandle: unknown = null;
  private job: string | null = null;
  running = false;

  constructor(
    private api: ApiClient,
    private callbacks: SessionCallbacks = {},
    private timers: TimerHooks = {
      setInterval: (fn, ms) => setInterval(fn, ms),
      clearInterval: (h) => clearInterval(h as Parameters<typeof clearInterval>[0]),
    },
  ) {}

  /** PUT topology, provision everything, kick off a realtime background run,
   * then poll counters until the job reports done. */
  async deployAndDirect(doc: TopologyDoc, flows: FlowRequest[], seed = 0):
      Promise<void> {
    await this.api.putTopology(doc);
    await this.api.provision();
    const job = await this.api.simulate(flows,
      { seed, background: true, realtime: true }) as SimulateJob;
    this.job = job.job;
    this.running = true;
    this.startPolling();
  }

  private startPolling(): void {
    this.pollHandle = this.timers.setInterval(() => {
      void this.pollOnce();
    }, POLL_INTERVAL_MS);
  }

  async pollOnce(): Promise<void> {
    try {
      const counters = await this.api.counters();
      this.callbacks.onCounters?.(counters);
      if (this.job) {
        const status = await this.api.simulationStatus(this.job);
        if (status.status !== "running") {
          this.stop();
          if (status.status === "done" && status.result) {
            this.callbacks.onDone?.(status.result);
          } else if (status.status === "error") {
            this.callbacks.onError?.(status.result);
          }
        }
      }
    } catch (err) {
      this.stop();
      this.callbacks.onError?.(err);
    }
  }

  stop(): void {
    if (this.pollHandle !== null) {
      this.timers.clearInterval(this.pollHandle);
      this.pollHandle = null;
    }
    this.running = false;
  }
}
