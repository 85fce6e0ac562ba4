/** DOM wiring: view tabs, palette, SVG canvas, validation panel, deploy
 * controls, live counters and a per-node inspection panel. All state changes
 * flow through the editor gestures and the API client. */

import { ApiClient, ApiError } from "./api.js";
import {
  SERVICE_VIEW_KIND, TopologyEditor, VIEW_PALETTE, VIEWS,
} from "./editor.js";
import { canonicalJson } from "./jsonutil.js";
import { DirectSession } from "./session.js";
import type {
  CountersDoc, EndpointDoc, NodeKind, ServiceKind, SimulationResultDoc,
  Violation,
} from "./types.js";

const NODE_COLORS: Record<string, string> = {
  CoreRouter: "#4a78b5",
  ProviderEdge: "#3a9e6e",
  CustomerEdge: "#c98a2b",
  Controller: "#9b59b6",
};

export class App {
  editor = new TopologyEditor();
  api: ApiClient;
  session: DirectSession | null = null;
  private pendingEndpoints: EndpointDoc[] = [];
  private connectFrom: string | null = null;
  private highlighted = new Set<string>();
  private lastCounters: CountersDoc | null = null;

  constructor(private root: HTMLElement, api?: ApiClient) {
    this.api = api ?? new ApiClient();
    this.render();
  }

  // -- skeleton ----------------------------------------------------------------

  private el<K extends keyof HTMLElementTagNameMap>(
      tag: K, attrs: Record<string, string> = {}, text = ""):
      HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
    if (text) node.textContent = text;
    return node;
  }

  private render(): void {
    this.root.innerHTML = "";
    const bar = this.el("div", { class: "topbar" });
    for (const view of VIEWS) {
      const btn = this.el("button",
        { class: view === this.editor.activeView ? "tab active" : "tab" }, view);
      btn.onclick = () => {
        this.editor.setView(view);
        this.pendingEndpoints = [];
        this.connectFrom = null;
        this.render();
      };
      bar.appendChild(btn);
    }
    const validateBtn = this.el("button", { class: "action" }, "validate");
    validateBtn.onclick = () => void this.runValidation();
    bar.appendChild(validateBtn);
    const deployBtn = this.el("button", { class: "action" }, "deploy & direct");
    deployBtn.onclick = () => void this.deployAndDirect();
    bar.appendChild(deployBtn);
    const exportBtn = this.el("button", { class: "action" }, "export JSON");
    exportBtn.onclick = () => this.showMessage(canonicalJson(this.editor.export()));
    bar.appendChild(exportBtn);
    this.root.appendChild(bar);

    this.root.appendChild(this.renderPalette());
    const main = this.el("div", { class: "main" });
    main.appendChild(this.renderCanvas());
    const side = this.el("div", { class: "side" });
    side.appendChild(this.el("div", { id: "messages", class: "messages" }));
    side.appendChild(this.el("div", { id: "counters", class: "counters" }));
    side.appendChild(this.el("div", { id: "inspector", class: "inspector" }));
    main.appendChild(side);
    this.root.appendChild(main);
    if (this.lastCounters) this.renderCounters(this.lastCounters);
  }

  private renderPalette(): HTMLElement {
    const palette = this.el("div", { class: "palette" });
    const kinds = VIEW_PALETTE[this.editor.activeView];
    for (const kind of kinds) {
      const btn = this.el("button", { class: "palette-item" }, `+ ${kind}`);
      btn.onclick = () => {
        const spot = { x: 60 + this.editor.nodes.length * 40 % 520, y: 80 };
        const res = this.editor.addNode(kind as NodeKind, spot);
        res.ok ? this.render() : this.rejectGesture(res.code, res.message);
      };
      palette.appendChild(btn);
    }
    const serviceKind = SERVICE_VIEW_KIND[this.editor.activeView];
    if (serviceKind) {
      const hint = this.el("span", { class: "hint" },
        `click ProviderEdge access ports to pick endpoints, then commit`);
      palette.appendChild(hint);
      const commit = this.el("button", { class: "palette-item" },
        `commit ${serviceKind}`);
      commit.onclick = () => this.commitService(serviceKind);
      palette.appendChild(commit);
    }
    return palette;
  }

  private renderCanvas(): SVGSVGElement {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("class", "canvas");
    svg.setAttribute("viewBox", "0 0 640 480");
    for (const link of this.editor.links) {
      const pa = this.editor.positions[link.a.node] ?? { x: 50, y: 50 };
      const pb = this.editor.positions[link.b.node] ?? { x: 90, y: 90 };
      const line = document.createElementNS(svg.namespaceURI, "line");
      line.setAttribute("x1", String(pa.x));
      line.setAttribute("y1", String(pa.y));
      line.setAttribute("x2", String(pb.x));
      line.setAttribute("y2", String(pb.y));
      line.setAttribute("class",
        `link ${link.kind}${this.highlighted.has(link.id) ? " bad" : ""}`);
      svg.appendChild(line);
    }
    for (const node of this.editor.nodes) {
      const pos = this.editor.positions[node.id] ?? { x: 50, y: 50 };
      const g = document.createElementNS(svg.namespaceURI, "g");
      const circle = document.createElementNS(svg.namespaceURI, "circle");
      circle.setAttribute("cx", String(pos.x));
      circle.setAttribute("cy", String(pos.y));
      circle.setAttribute("r", "16");
      circle.setAttribute("fill", NODE_COLORS[node.kind] ?? "#888");
      if (this.highlighted.has(node.id)) circle.setAttribute("stroke", "#e74c3c");
      const label = document.createElementNS(svg.namespaceURI, "text");
      label.setAttribute("x", String(pos.x));
      label.setAttribute("y", String(pos.y + 28));
      label.setAttribute("text-anchor", "middle");
      label.textContent = node.id;
      g.appendChild(circle);
      g.appendChild(label);
      g.addEventListener("click", () => this.clickNode(node.id));
      svg.appendChild(g);
    }
    return svg as SVGSVGElement;
  }

  // -- gestures from the canvas ----------------------------------------------------

  private clickNode(id: string): void {
    const serviceKind = SERVICE_VIEW_KIND[this.editor.activeView];
    if (this.editor.activeView === "dataPlane") {
      if (this.connectFrom === null) {
        this.connectFrom = id;
        this.showMessage(`connect ${id} to ...`);
        return;
      }
      const res = this.editor.connect(this.connectFrom, id);
      this.connectFrom = null;
      res.ok ? this.render() : this.rejectGesture(res.code, res.message);
    } else if (this.editor.activeView === "controlPlane") {
      const res = this.editor.assignController(id, "ctrl1");
      res.ok ? this.showMessage(`${id} -> ctrl1`)
        : this.rejectGesture(res.code, res.message);
    } else if (serviceKind) {
      const ports = this.editor.accessPorts(id);
      const ep: EndpointDoc = { pe: id, port: ports[0] ?? "", vlan: null };
      const check = this.editor.checkEndpoint(ep);
      if (!check.ok) {
        this.rejectGesture(check.code, check.message);
        return;
      }
      this.pendingEndpoints.push(ep);
      this.showMessage(
        `endpoint ${ep.pe}/${ep.port} picked (${this.pendingEndpoints.length})`);
    }
    this.inspect(id);
  }

  private commitService(kind: ServiceKind): void {
    const res = this.editor.addService(kind, this.pendingEndpoints.slice());
    if (!res.ok) {
      this.rejectGesture(res.code, res.message);
      return;
    }
    this.pendingEndpoints = [];
    this.showMessage(`service ${res.value} added`);
    this.render();
  }

  private rejectGesture(code: string, message: string): void {
    this.showMessage(`rejected: ${code} - ${message}`, true);
  }

  // -- API flows -----------------------------------------------------------------

  async runValidation(): Promise<void> {
    try {
      const report = await this.api.validate(this.editor.export());
      this.highlighted = new Set(report.violations.map((v: Violation) => v.subject));
      this.showMessage(report.ok ? "topology valid"
        : report.violations.map((v) => `${v.code}: ${v.message}`).join("\n"),
        !report.ok);
      this.render();
    } catch (err) {
      this.showApiError(err);
    }
  }

  async deployAndDirect(): Promise<void> {
    const doc = this.editor.export();
    const flows = this.defaultFlows();
    this.session?.stop();
    this.session = new DirectSession(this.api, {
      onCounters: (c) => this.renderCounters(c),
      onDone: (result) => this.renderResult(result),
      onError: (err) => this.showApiError(err),
    });
    try {
      await this.session.deployAndDirect(doc, flows, 1);
      this.showMessage("deployed; directing traffic...");
    } catch (err) {
      this.showApiError(err);
    }
  }

  /** One default flow per provisioned service, so the counters move. */
  private defaultFlows() {
    return this.editor.services.map((s, i) => ({
      flowId: `ui-${s.id}`, ratePps: 200, pktBytes: 600, durationS: 10.0,
      service: s.id, srcEndpoint: 0, dstEndpoint: Math.min(1, s.endpoints.length - 1),
    }));
  }

  // -- panels ----------------------------------------------------------------------

  private panel(id: string): HTMLElement | null {
    return this.root.querySelector(`#${id}`);
  }

  private showMessage(text: string, isError = false): void {
    const box = this.panel("messages");
    if (!box) return;
    const para = this.el("pre", { class: isError ? "msg error" : "msg" }, text);
    box.prepend(para);
    while (box.childNodes.length > 6) box.removeChild(box.lastChild!);
  }

  private showApiError(err: unknown): void {
    if (err instanceof ApiError) {
      this.showMessage(`API ${err.code}: ${err.message}`, true);
    } else {
      this.showMessage(String(err), true);
    }
  }

  renderCounters(counters: CountersDoc): void {
    this.lastCounters = counters;
    const box = this.panel("counters");
    if (!box) return;
    box.innerHTML = "<h3>live counters</h3>";
    const table = this.el("table", { class: "counter-table" });
    table.innerHTML = "<tr><th>node</th><th>packets</th><th>cost</th></tr>";
    for (const node of counters.nodes) {
      const row = this.el("tr", { "data-node": node.nodeId });
      row.innerHTML = `<td>${node.nodeId}</td><td>${node.packets}</td>` +
        `<td>${node.cost.toFixed(6)}</td>`;
      table.appendChild(row);
    }
    box.appendChild(table);
    const services = this.el("div", { class: "service-audit" });
    for (const svc of counters.services) {
      services.appendChild(this.el("div", {},
        `${svc.serviceId} (${svc.kind}): ${svc.sbps.length} paths`));
    }
    box.appendChild(services);
  }

  renderResult(result: SimulationResultDoc): void {
    const lines = [
      `run finished: injected ${result.totals.injected}, ` +
      `delivered ${result.totals.delivered}, dropped ${result.totals.dropped}`,
    ];
    for (const flow of result.flows) {
      const reasons = Object.entries(flow.reasonHistogram)
        .map(([k, v]) => `${k}=${v}`).join(" ") || "none";
      lines.push(`  ${flow.flowId}: ${flow.delivered}/${flow.injected} drops: ${reasons}`);
    }
    this.showMessage(lines.join("\n"));
  }

  /** Per-node inspection: flow tables and counters from the last poll. */
  inspect(nodeId: string): void {
    const box = this.panel("inspector");
    if (!box) return;
    box.innerHTML = `<h3>${nodeId}</h3>`;
    const node = this.lastCounters?.nodes.find((n) => n.nodeId === nodeId);
    if (!node) {
      box.appendChild(this.el("div", {}, "no runtime state yet (deploy first)"));
      return;
    }
    box.appendChild(this.el("div", {},
      `packets ${node.packets}, bytes ${node.bytes}, cost ${node.cost.toFixed(6)}`));
    const table = this.el("table", { class: "rule-table" });
    table.innerHTML =
      "<tr><th>t</th><th>prio</th><th>match</th><th>actions</th><th>pkts</th></tr>";
    for (const rule of node.rules) {
      const row = this.el("tr");
      row.innerHTML = `<td>${rule.tableId}</td><td>${rule.priority}</td>` +
        `<td>${JSON.stringify(rule.match)}</td>` +
        `<td>${JSON.stringify(rule.actions)}</td><td>${rule.packets}</td>`;
      table.appendChild(row);
    }
    box.appendChild(table);
  }
}

export function mount(rootId = "app", api?: ApiClient): App {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`no #${rootId} element`);
  return new App(root, api);
}
