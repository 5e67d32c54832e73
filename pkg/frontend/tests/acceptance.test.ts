/**
 * Scripted UI acceptance checks, driven against the scripted protocol
 * server: linked brushing reaches the image panel's exact pixel set,
 * publish/connect label interactions keep two widgets equal, and
 * progressive runs re-render the scatterplot live until paused.
 */

import { describe, expect, it } from "vitest";

import { VaultClient } from "../src/client";
import { SessionStore } from "../src/store";
import { ScatterplotPanel } from "../src/panels/scatterplot";
import { ImageViewPanel } from "../src/panels/imageview";
import { DataPropertiesPanel } from "../src/panels/properties";
import { ActionWidget } from "../src/widgets";
import {
  FakeServer,
  FakeTransport,
  decimalAction,
  groupAction,
  imageNode,
  pointsNode,
} from "./fakeServer";

function flush(times = 6): Promise<void> {
  let chain = Promise.resolve();
  for (let i = 0; i < times; i++) {
    chain = chain.then(() => new Promise((resolve) => setTimeout(resolve, 0)));
  }
  return chain;
}

function makeSession() {
  const server = new FakeServer();
  const client = new VaultClient(new FakeTransport(server));
  const store = new SessionStore(client);
  return { server, client, store };
}

/** 4x3 image points + derived embedding sharing the selection. */
function imageScene(server: FakeServer) {
  const width = 4;
  const height = 3;
  const n = width * height;
  const pixelValues = new Float32Array(n * 2);
  const embeddingValues = new Float32Array(n * 2);
  for (let i = 0; i < n; i++) {
    pixelValues[i * 2] = i;
    pixelValues[i * 2 + 1] = i % width;
    embeddingValues[i * 2] = i % width; // x spreads pixels on a grid
    embeddingValues[i * 2 + 1] = Math.floor(i / width);
  }
  server.addDataset({
    node: pointsNode("pix", "pixels", n, 2),
    values: pixelValues,
    selectionKey: "root",
  });
  server.addDataset({
    node: imageNode("img", "pixels image", width, height, "pix"),
    values: new Float32Array(0),
    selectionKey: "img-own",
  });
  server.addDataset({
    node: pointsNode("emb", "embedding", n, 2, "pix", true),
    values: embeddingValues,
    selectionKey: "root", // derived: shares the source selection object
  });
  return { width, height, n };
}

describe("linked brushing (acceptance)", () => {
  it("brushing the embedding highlights exactly those pixels in the image view", async () => {
    const { server, client, store } = makeSession();
    imageScene(server);
    await store.refresh();

    const scatter = new ScatterplotPanel(document.createElement("div"), client, store, "inst-s");
    await scatter.bind("emb");
    const image = new ImageViewPanel(document.createElement("div"), client, store, "inst-i");
    await image.addLayer("emb");
    await flush();

    // Rectangle over the left two columns of the embedding grid.
    await scatter.brushGesture([{ x: -0.5, y: -0.5 }, { x: 1.4, y: 2.5 }]);
    await flush();

    const expected = [0, 1, 4, 5, 8, 9]; // columns 0 and 1 of a 4-wide grid
    expect(scatter.selectedIndices()).toEqual(expected);
    expect(image.highlightedPixels()).toEqual(expected); // index-set equality
  });

  it("layer resolution uses parent extents; unresolvable layers are rejected", async () => {
    const { server, client, store } = makeSession();
    imageScene(server);
    server.addDataset({
      node: pointsNode("odd", "unrelated", 7, 2),
      values: new Float32Array(14),
      selectionKey: "odd",
    });
    await store.refresh();
    const image = new ImageViewPanel(document.createElement("div"), client, store, "inst-i");
    await image.addLayer("emb"); // embedding resolves via the parent chain
    await expect(image.addLayer("odd")).rejects.toThrow(/extents/);
  });

  it("add and remove combine modes compose against the shared selection", async () => {
    const { server, client, store } = makeSession();
    imageScene(server);
    await store.refresh();
    const scatter = new ScatterplotPanel(document.createElement("div"), client, store, "inst-s");
    await scatter.bind("emb");
    await flush();
    await scatter.brushGesture([{ x: -0.5, y: -0.5 }, { x: 0.4, y: 2.5 }]); // column 0
    await flush();
    scatter.combine = "add";
    await scatter.brushGesture([{ x: 0.6, y: -0.5 }, { x: 1.4, y: 2.5 }]); // + column 1
    await flush();
    expect(scatter.selectedIndices()).toEqual([0, 1, 4, 5, 8, 9]);
    scatter.combine = "remove";
    await scatter.brushGesture([{ x: -0.5, y: -0.5 }, { x: 1.4, y: 0.4 }]); // - row 0
    await flush();
    expect(scatter.selectedIndices()).toEqual([4, 5, 8, 9]);
  });
});

describe("parameter linking UX (acceptance)", () => {
  function sigmaWidgets(server: FakeServer, client: VaultClient, store: SessionStore) {
    const sigmaA = decimalAction("sig-a", "sigma", 0.15);
    const sigmaB = decimalAction("sig-b", "sigma", 0.9);
    server.addInstance(
      { instanceId: "inst-a", pluginId: "org.vault.scatterplot", kind: "View",
        displayName: "Scatterplot", inputs: [], output: null, state: "Created" },
      groupAction("root-a", "org.vault.scatterplot", [sigmaA]),
    );
    server.addInstance(
      { instanceId: "inst-b", pluginId: "org.vault.scatterplot", kind: "View",
        displayName: "Scatterplot", inputs: [], output: null, state: "Created" },
      groupAction("root-b", "org.vault.scatterplot", [sigmaB]),
    );
    const widgetA = new ActionWidget(client, store, sigmaA);
    const widgetB = new ActionWidget(client, store, sigmaB);
    document.body.append(widgetA.element, widgetB.element);
    return { widgetA, widgetB };
  }

  it("publish via the label dialog, connect the peer, both widgets track", async () => {
    const { server, client, store } = makeSession();
    const { widgetA, widgetB } = sigmaWidgets(server, client, store);

    const labelA = widgetA.element.querySelector(".action-label")!;
    expect(labelA.classList.contains("linkable")).toBe(true); // underlined
    expect(labelA.classList.contains("linked")).toBe(false);

    // Publish "Sigma" under a public name through the label dialog.
    (labelA as HTMLElement).click();
    await flush();
    const dialogA = widgetA.element.querySelector(".link-dialog")!;
    (dialogA.querySelector(".publish-name") as HTMLInputElement).value = "kde-sigma";
    (dialogA.querySelector(".publish") as HTMLButtonElement).click();
    await flush();
    expect(labelA.classList.contains("linked")).toBe(true); // italic

    // Connect the second panel's sigma to the published entry.
    const labelB = widgetB.element.querySelector(".action-label")! as HTMLElement;
    labelB.click();
    await flush();
    const connect = widgetB.element.querySelector(".link-dialog .connect") as HTMLButtonElement;
    expect(connect.textContent).toContain("kde-sigma");
    connect.click();
    await flush();
    expect(labelB.classList.contains("linked")).toBe(true);
    expect(widgetB.displayedValues()).toEqual(["0.15", "0.15"]); // adopted pool value

    // Moving either widget leaves both displaying equal values.
    const slider = widgetA.element.querySelector("input[type=range]") as HTMLInputElement;
    slider.value = "0.3";
    slider.dispatchEvent(new Event("input"));
    await flush();
    expect(widgetA.displayedValues()).toEqual(["0.3", "0.3"]);
    expect(widgetB.displayedValues()).toEqual(["0.3", "0.3"]);

    const spinB = widgetB.element.querySelector("input[type=number]") as HTMLInputElement;
    spinB.value = "0.7";
    spinB.dispatchEvent(new Event("change"));
    await flush();
    expect(widgetA.displayedValues()).toEqual(["0.7", "0.7"]);
    expect(widgetB.displayedValues()).toEqual(["0.7", "0.7"]);

    // Disconnect removes the italics and stops tracking.
    labelB.click();
    await flush();
    (widgetB.element.querySelector(".link-dialog .disconnect") as HTMLButtonElement).click();
    await flush();
    expect(labelB.classList.contains("linked")).toBe(false);
    slider.value = "0.1";
    slider.dispatchEvent(new Event("input"));
    await flush();
    expect(widgetB.displayedValues()).toEqual(["0.7", "0.7"]);
  });

  it("invisible actions are not rendered", () => {
    const { client, store } = makeSession();
    const hidden = decimalAction("hid", "secret", 0.5);
    hidden.flags.visible = false;
    const group = groupAction("root", "plugin", [hidden]);
    const widget = new ActionWidget(client, store, group);
    expect(widget.element.querySelectorAll(".action-row").length).toBe(0);
  });
});

describe("progressive display (acceptance)", () => {
  it("start from the properties panel, >= 40 re-renders, pause halts updates", async () => {
    const { server, client, store } = makeSession();
    const n = 50;
    const embedding = new Float32Array(n * 2).map(() => Math.random());
    server.addDataset({
      node: pointsNode("pts", "pts", n, 4),
      values: new Float32Array(n * 4),
      selectionKey: "root",
    });
    server.addDataset({
      node: pointsNode("emb", "t-SNE embedding", n, 2, "pts", true),
      values: embedding,
      selectionKey: "root",
    });
    const settings = groupAction("root-t", "org.vault.tsne", [
      decimalAction("perp", "perplexity", 5),
    ]);
    server.addInstance(
      { instanceId: "inst-t", pluginId: "org.vault.tsne", kind: "Analytics",
        displayName: "t-SNE", inputs: ["pts"], output: "emb", state: "Created" },
      settings,
    );
    await store.refresh();

    const scatter = new ScatterplotPanel(document.createElement("div"), client, store, "inst-s");
    await scatter.bind("emb");
    await flush();

    const properties = new DataPropertiesPanel(document.createElement("div"), client, store);
    await properties.showDataset("emb");
    const startButton = properties.root.querySelector(".control-start") as HTMLButtonElement;
    expect(startButton).toBeTruthy();
    startButton.click();
    await flush();
    expect(server.running.get("inst-t")).toBe("Running");

    // A 500-iteration run with updateEvery=10: 50 progressive updates.
    const before = scatter.renderCount;
    for (let update = 0; update < 50; update++) {
      server.pushDataUpdate("emb", "inst-t");
      await flush(2);
    }
    const renders = scatter.renderCount - before;
    expect(renders).toBeGreaterThanOrEqual(40); // coalescing allowed

    // Pause from the panel: the state chip flips and updates halt
    // within one update period.
    const pauseButton = properties.root.querySelector(".control-pause") as HTMLButtonElement;
    pauseButton.click();
    await flush();
    expect(properties.stateChip?.textContent).toBe("Paused");
    expect(server.sentMessages.some(
      (message) => message.type === "plugin.control" &&
        message.payload.command === "pause")).toBe(true);
    const paused = scatter.renderCount;
    for (let update = 0; update < 5; update++) {
      server.pushDataUpdate("emb", "inst-t"); // no-ops while paused
      await flush(2);
    }
    expect(scatter.renderCount).toBe(paused);
  });
});
