/**
 * Data properties panel: metadata for the dataset picked in the
 * hierarchy, its attached settings actions (the UI of analytics and
 * transformation plugins), run controls with a state chip, and the
 * cluster list (clicking a cluster selects its members).
 */

import { VaultClient } from "../client";
import { SessionStore } from "../store";
import { ActionWidget } from "../widgets";
import { InstanceInfo } from "../protocol";

export class DataPropertiesPanel {
  body: HTMLElement;
  widgets: ActionWidget[] = [];
  stateChip: HTMLElement | null = null;

  constructor(
    public root: HTMLElement,
    private client: VaultClient,
    private store: SessionStore,
  ) {
    this.body = document.createElement("div");
    this.body.className = "data-properties";
    root.append(this.body);
  }

  async showDataset(guid: string): Promise<void> {
    this.body.textContent = "";
    this.widgets = [];
    this.stateChip = null;
    const node = this.store.node(guid);
    if (!node) return;

    const info = document.createElement("div");
    info.className = "dataset-info";
    info.textContent =
      node.kind === "points"
        ? `${node.name}: ${node.effectiveCount} items, ${node.numDims} dimensions`
        : node.kind === "image"
          ? `${node.name}: ${node.width}x${node.height} pixels`
          : `${node.name}: ${node.clusters?.length ?? 0} clusters`;
    this.body.append(info);

    if (node.kind === "clusters") {
      this.body.append(this.buildClusterList(guid));
    }

    const instance = (await this.client.listInstances()).find(
      (candidate) => candidate.output === guid,
    );
    if (instance) {
      this.body.append(this.buildRunControls(instance));
    }

    for (const tree of await this.client.listActions({ dataset: guid })) {
      const widget = new ActionWidget(this.client, this.store, tree.action);
      this.widgets.push(widget);
      this.body.append(widget.element);
    }
  }

  private buildClusterList(guid: string): HTMLElement {
    const node = this.store.node(guid)!;
    const list = document.createElement("div");
    list.className = "cluster-list";
    (node.clusters ?? []).forEach((cluster, index) => {
      const row = document.createElement("button");
      row.className = "cluster-row";
      row.dataset.clusterIndex = String(index);
      row.textContent = `${cluster.name} (${cluster.size})`;
      row.style.borderLeftColor = `rgba(${cluster.color.join(",")})`;
      row.addEventListener("click", () => {
        // Clicking a cluster selects its members on the shared selection.
        void this.client.setSelection(guid, cluster.members);
      });
      list.append(row);
    });
    return list;
  }

  private buildRunControls(instance: InstanceInfo): HTMLElement {
    const controls = document.createElement("div");
    controls.className = "run-controls";
    const chip = document.createElement("span");
    chip.className = "state-chip";
    chip.textContent = instance.state;
    this.stateChip = chip;
    controls.append(chip);
    for (const command of ["start", "pause", "resume", "cancel"] as const) {
      const button = document.createElement("button");
      button.className = `control-${command}`;
      button.textContent = command;
      button.addEventListener("click", () => {
        void this.client.control(instance.instanceId, command).then((state) => {
          chip.textContent = state;
        });
      });
      controls.append(button);
    }
    return controls;
  }
}
