/** Editor gestures: golden round-trip against the server's canonical fixture
 * and inline rejections carrying the validator's own codes. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  ACCESS_LINK_NOT_PE, BAD_ASSIGNMENT_SUBJECT, BAD_VLAN, CE_LINK_COUNT,
  CONTROLLER_HAS_LINKS, DUPLICATE_ENDPOINT_CLAIM, DUPLICATE_NODE_ID,
  ENDPOINT_NOT_ACCESS_PORT, SERVICE_ENDPOINT_COUNT, TopologyEditor,
} from "../src/editor.js";
import { canonicalJson, stripLayout } from "../src/jsonutil.js";
import type { TopologyDoc } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const FIXTURE = readFileSync(join(here, "fixtures", "chain-vll.json"), "utf-8");

function designChainFixture(): TopologyEditor {
  const ed = new TopologyEditor();
  ed.modelName = "chain";
  // data-plane view: place nodes and wire them up
  expect(ed.addNode("ProviderEdge", { x: 100, y: 200 }).ok).toBe(true);  // pe1
  expect(ed.addNode("ProviderEdge", { x: 400, y: 200 }).ok).toBe(true);  // pe2
  expect(ed.addNode("CustomerEdge", { x: 40, y: 320 }).ok).toBe(true);   // ce1
  expect(ed.addNode("CustomerEdge", { x: 460, y: 320 }).ok).toBe(true);  // ce2
  expect(ed.addNode("CoreRouter", { x: 250, y: 120 }).ok).toBe(true);    // cr1
  expect(ed.connect("pe1", "cr1").ok).toBe(true);  // l1, ports pe1/1 cr1/1
  expect(ed.connect("cr1", "pe2").ok).toBe(true);  // l2, ports cr1/2 pe2/1
  expect(ed.connect("pe1", "ce1").ok).toBe(true);  // l3 access
  expect(ed.connect("pe2", "ce2").ok).toBe(true);  // l4 access
  // control-plane view: one controller for everything
  ed.setView("controlPlane");
  ed.assignAll("ctrl1");
  // VLL view: endpoints on the two access ports
  ed.setView("serviceVll");
  const res = ed.addService("IpVll", [
    { pe: "pe1", port: "2", vlan: null },
    { pe: "pe2", port: "2", vlan: null },
  ]);
  expect(res.ok).toBe(true);
  return ed;
}

describe("golden round-trip", () => {
  it("a UI-designed fixture exports the canonical document", () => {
    const ed = designChainFixture();
    const doc = ed.export();
    expect(doc.layout).toBeDefined();
    expect(canonicalJson(stripLayout(doc))).toBe(FIXTURE);
  });

  it("import/export preserves the layout extension key and positions", () => {
    const ed = designChainFixture();
    ed.setView("dataPlane");
    ed.moveNode("cr1", { x: 321, y: 99 });
    const doc = ed.export();

    const ed2 = new TopologyEditor();
    ed2.import(doc);
    expect(ed2.positions["cr1"]).toEqual({ x: 321, y: 99 });
    // positions survive view switches
    ed2.setView("serviceVss");
    ed2.setView("dataPlane");
    expect(ed2.positions["cr1"]).toEqual({ x: 321, y: 99 });
    expect(canonicalJson(ed2.export())).toBe(canonicalJson(doc));
  });

  it("unknown extension keys round-trip untouched", () => {
    const ed = designChainFixture();
    const doc = ed.export();
    (doc as Record<string, unknown>)["x-annotations"] = { note: "keep me" };
    const ed2 = new TopologyEditor();
    ed2.import(doc);
    expect(ed2.export()["x-annotations"]).toEqual({ note: "keep me" });
  });
});

describe("inline gesture rejections mirror validator codes", () => {
  it("rejects CE-to-CR connections", () => {
    const ed = new TopologyEditor();
    ed.addNode("CoreRouter");
    ed.addNode("CustomerEdge");
    const res = ed.connect("ce1", "cr1");
    expect(res.ok).toBe(false);
    if (!res.ok) expect(res.code).toBe(ACCESS_LINK_NOT_PE);
  });

  it("rejects CE-to-CE connections", () => {
    const ed = new TopologyEditor();
    ed.addNode("CustomerEdge");
    ed.addNode("CustomerEdge");
    const res = ed.connect("ce1", "ce2");
    expect(!res.ok && res.code).toBe(ACCESS_LINK_NOT_PE);
  });

  it("rejects a second link on a CustomerEdge", () => {
    const ed = new TopologyEditor();
    ed.addNode("ProviderEdge");
    ed.addNode("ProviderEdge");
    ed.addNode("CustomerEdge");
    expect(ed.connect("pe1", "ce1").ok).toBe(true);
    const res = ed.connect("pe2", "ce1");
    expect(!res.ok && res.code).toBe(CE_LINK_COUNT);
  });

  it("rejects links to controllers", () => {
    const ed = new TopologyEditor();
    ed.addNode("ProviderEdge");
    ed.setView("controlPlane");
    expect(ed.addNode("Controller").ok).toBe(true);
    ed.setView("dataPlane");
    const res = ed.connect("pe1", "ctrl1");
    expect(!res.ok && res.code).toBe(CONTROLLER_HAS_LINKS);
  });

  it("rejects duplicate node ids", () => {
    const ed = new TopologyEditor();
    expect(ed.addNode("CoreRouter", undefined, "x1").ok).toBe(true);
    const res = ed.addNode("ProviderEdge", undefined, "x1");
    expect(!res.ok && res.code).toBe(DUPLICATE_NODE_ID);
  });

  it("rejects controller assignment on non-core nodes", () => {
    const ed = new TopologyEditor();
    ed.addNode("CustomerEdge");
    const res = ed.assignController("ce1", "ctrl1");
    expect(!res.ok && res.code).toBe(BAD_ASSIGNMENT_SUBJECT);
  });

  it("rejects endpoints off access ports", () => {
    const ed = designChainFixture();
    ed.setView("servicePw");
    const onCore = ed.checkEndpoint({ pe: "pe1", port: "1", vlan: null });
    expect(!onCore.ok && onCore.code).toBe(ENDPOINT_NOT_ACCESS_PORT);
    const onCr = ed.checkEndpoint({ pe: "cr1", port: "1", vlan: null });
    expect(!onCr.ok && onCr.code).toBe(ENDPOINT_NOT_ACCESS_PORT);
  });

  it("rejects claimed endpoints", () => {
    const ed = designChainFixture();
    const res = ed.checkEndpoint({ pe: "pe1", port: "2", vlan: null });
    expect(!res.ok && res.code).toBe(DUPLICATE_ENDPOINT_CLAIM);
    // a tagged claim on the same port is fine
    expect(ed.checkEndpoint({ pe: "pe1", port: "2", vlan: 100 }).ok).toBe(true);
  });

  it("rejects out-of-range VLANs", () => {
    const ed = designChainFixture();
    const res = ed.checkEndpoint({ pe: "pe1", port: "2", vlan: 5000 });
    expect(!res.ok && res.code).toBe(BAD_VLAN);
  });

  it("rejects wrong endpoint counts", () => {
    const ed = designChainFixture();
    const one = ed.addService("Pw", [{ pe: "pe1", port: "2", vlan: 10 }]);
    expect(!one.ok && one.code).toBe(SERVICE_ENDPOINT_COUNT);
    const vss = ed.addService("Vss", [{ pe: "pe1", port: "2", vlan: 10 }]);
    expect(!vss.ok && vss.code).toBe(SERVICE_ENDPOINT_COUNT);
  });

  it("palette is view-scoped", () => {
    const ed = new TopologyEditor();
    ed.setView("controlPlane");
    const res = ed.addNode("CoreRouter");
    expect(!res.ok && res.code).toBe("KIND_NOT_IN_VIEW");
  });
});
