import { describe, expect, it } from "vitest";

import { VaultClient } from "../src/client";
import { SessionStore } from "../src/store";
import { DockLayout } from "../src/layout";
import { pruneLayout } from "../src/app";
import { HierarchyPanel } from "../src/panels/hierarchy";
import { compositeLayers } from "../src/panels/imageview";
import { LayoutNode } from "../src/protocol";
import { FakeServer, FakeTransport, imageNode, pointsNode } from "./fakeServer";

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

function makeSession() {
  const server = new FakeServer();
  const client = new VaultClient(new FakeTransport(server));
  const store = new SessionStore(client);
  return { server, client, store };
}

const LAYOUT: LayoutNode = {
  type: "split",
  orientation: "h",
  ratio: 0.5,
  children: [
    { type: "leaf", instance: "a" },
    { type: "tabs", instances: ["b", "c"] },
  ],
};

describe("dock layout", () => {
  const titles = new Map([["a", "Scatterplot"], ["b", "Image view"], ["c", "Hierarchy"]]);

  it("renders splits, tabs, and leaves with affordances when unlocked", () => {
    const root = document.createElement("div");
    const dock = new DockLayout(root, false, () => {});
    dock.render(LAYOUT, titles);
    expect(root.querySelectorAll(".dock-leaf").length).toBe(3);
    expect(root.querySelectorAll(".close").length).toBe(3);
    expect(root.querySelectorAll(".drag-handle").length).toBe(3);
    expect(root.querySelectorAll(".dock-divider").length).toBe(1);
    expect(dock.hosts.size).toBe(3);
  });

  it("locked workspaces have no drag/close/split affordances in the DOM", () => {
    const root = document.createElement("div");
    const dock = new DockLayout(root, true, () => {});
    dock.render(LAYOUT, titles);
    expect(root.querySelectorAll(".dock-leaf").length).toBe(3);
    expect(root.querySelectorAll(".close").length).toBe(0);
    expect(root.querySelectorAll(".drag-handle").length).toBe(0);
    expect(root.querySelectorAll(".dock-divider").length).toBe(0);
  });

  it("close routes through the callback (destroyInstance path)", () => {
    const root = document.createElement("div");
    const closed: string[] = [];
    const dock = new DockLayout(root, false, (instanceId) => closed.push(instanceId));
    dock.render(LAYOUT, titles);
    (root.querySelector(".dock-leaf[data-instance-id=a] .close") as HTMLButtonElement).click();
    expect(closed).toEqual(["a"]);
  });

  it("pruning a closed instance collapses its split", () => {
    const pruned = pruneLayout(LAYOUT, "a");
    expect(pruned).toEqual({ type: "tabs", instances: ["b", "c"] });
    expect(pruneLayout({ type: "leaf", instance: "x" }, "x")).toBeNull();
  });
});

describe("hierarchy panel", () => {
  it("context menu lists compatible plugins and groups multi-selections", async () => {
    const { server, client, store } = makeSession();
    server.addDataset({
      node: pointsNode("a", "alpha", 10, 3),
      values: new Float32Array(30),
      selectionKey: "a",
    });
    server.addDataset({
      node: pointsNode("b", "beta", 10, 2),
      values: new Float32Array(20),
      selectionKey: "b",
    });
    server.plugins = [
      { pluginId: "org.vault.pca", kind: "Analytics", displayName: "PCA",
        acceptedInputKinds: ["points"], version: "1.0.0" },
      { pluginId: "org.vault.tsne", kind: "Analytics", displayName: "t-SNE",
        acceptedInputKinds: ["points"], version: "1.0.0" },
    ];
    await store.refresh();
    const panel = new HierarchyPanel(document.createElement("div"), client, store);
    const rows = panel.list.querySelectorAll<HTMLElement>(".hierarchy-row");
    expect(rows.length).toBe(2);

    rows[0].click();
    rows[1].dispatchEvent(new MouseEvent("click", { shiftKey: true, bubbles: true }));
    const menu = await panel.openContextMenu(store.node("a")!, rows[0]);
    const labels = [...menu.querySelectorAll(".menu-item")].map((item) => item.textContent);
    expect(labels).toContain("PCA");
    expect(labels).toContain("t-SNE");
    expect(labels).toContain("group selected datasets");

    (menu.querySelector(".menu-item.group") as HTMLButtonElement).click();
    await flush();
    expect(server.sentMessages.some((message) => message.type === "dataset.group")).toBe(true);
  });

  it("image extents resolve through the ancestor chain", async () => {
    const { server, store } = makeSession();
    server.addDataset({
      node: pointsNode("pix", "pixels", 12, 2),
      values: new Float32Array(24),
      selectionKey: "root",
    });
    server.addDataset({
      node: imageNode("img", "pixels image", 4, 3, "pix"),
      values: new Float32Array(0),
      selectionKey: "img",
    });
    server.addDataset({
      node: pointsNode("emb", "embedding", 12, 2, "pix", true),
      values: new Float32Array(24),
      selectionKey: "root",
    });
    server.addDataset({
      node: pointsNode("odd", "odd", 5, 2),
      values: new Float32Array(10),
      selectionKey: "odd",
    });
    await store.refresh();
    expect(store.imageExtents("img")).toEqual({ width: 4, height: 3 });
    expect(store.imageExtents("emb")).toEqual({ width: 4, height: 3 });
    expect(store.imageExtents("pix")).toEqual({ width: 4, height: 3 });
    expect(store.imageExtents("odd")).toBeNull();
  });
});

describe("layer compositing", () => {
  it("single opaque layer is the pure colormapped band", () => {
    const values = new Float32Array([0, 0.5, 1, 0.25]);
    const out = compositeLayers(2, 2, [
      { values, opacity: 1, colormapName: "grayscale" },
    ]);
    expect([...out.slice(0, 4)]).toEqual([0, 0, 0, 255]);
    expect([...out.slice(8, 12)]).toEqual([255, 255, 255, 255]);
  });

  it("fully transparent top layers leave the bottom visible", () => {
    const bottom = new Float32Array([1, 1, 1, 1]);
    const top = new Float32Array([0, 0, 0, 0]);
    const alone = compositeLayers(2, 2, [
      { values: bottom, opacity: 1, colormapName: "grayscale" },
    ]);
    const covered = compositeLayers(2, 2, [
      { values: bottom, opacity: 1, colormapName: "grayscale" },
      { values: top, opacity: 0, colormapName: "viridis" },
      { values: top, opacity: 0, colormapName: "plasma" },
    ]);
    expect([...covered]).toEqual([...alone]);
  });

  it("half-opacity blends back-to-front", () => {
    const bottom = new Float32Array([0]);
    const top = new Float32Array([0]);
    const out = compositeLayers(1, 1, [
      { values: bottom, opacity: 1, colormapName: "grayscale" }, // black
      { values: top, opacity: 0.5, colormapName: "coolwarm" },
    ]);
    expect(out[0]).toBeGreaterThan(0); // coolwarm low end blended in
    expect(out[3]).toBe(255);
  });
});
