/**
 * Application shell: connects the client, mirrors the server's layout and
 * instances into dock panels, and keeps every panel subscribed to the
 * pushes that concern it.
 */

import { VaultClient } from "./client";
import { SessionStore } from "./store";
import { DockLayout } from "./layout";
import { ScatterplotPanel } from "./panels/scatterplot";
import { ImageViewPanel } from "./panels/imageview";
import { HierarchyPanel } from "./panels/hierarchy";
import { DataPropertiesPanel } from "./panels/properties";
import { InstanceInfo, LayoutNode } from "./protocol";

export class VaultApp {
  store: SessionStore;
  dock: DockLayout | null = null;
  panels = new Map<string, ScatterplotPanel | ImageViewPanel | HierarchyPanel | DataPropertiesPanel>();
  properties: DataPropertiesPanel | null = null;

  constructor(
    public root: HTMLElement,
    public client: VaultClient,
  ) {
    this.store = new SessionStore(client);
  }

  async start(): Promise<void> {
    await this.store.refresh();
    const { layout, locked } = await this.client.getLayout();
    const instances = await this.client.listInstances();
    this.dock = new DockLayout(this.root, locked, (instanceId) => {
      void this.closePanel(instanceId);
    });
    this.renderLayout(layout ?? defaultLayout(instances), instances);
  }

  private renderLayout(layout: LayoutNode | null, instances: InstanceInfo[]): void {
    const titles = new Map(instances.map((i) => [i.instanceId, i.displayName]));
    this.dock!.render(layout, titles);
    for (const instance of instances) {
      const host = this.dock!.hosts.get(instance.instanceId);
      if (!host) continue;
      void this.mountPanel(instance, host.body);
    }
  }

  private async mountPanel(instance: InstanceInfo, body: HTMLElement): Promise<void> {
    switch (instance.pluginId) {
      case "org.vault.scatterplot": {
        const panel = new ScatterplotPanel(body, this.client, this.store, instance.instanceId);
        this.panels.set(instance.instanceId, panel);
        if (instance.inputs[0]) await panel.bind(instance.inputs[0]);
        break;
      }
      case "org.vault.image_view": {
        const panel = new ImageViewPanel(body, this.client, this.store, instance.instanceId);
        this.panels.set(instance.instanceId, panel);
        for (const dataset of instance.inputs) await panel.addLayer(dataset);
        break;
      }
      case "org.vault.data_hierarchy": {
        const panel = new HierarchyPanel(body, this.client, this.store);
        panel.onOpenDataset = (guid) => void this.properties?.showDataset(guid);
        this.panels.set(instance.instanceId, panel);
        break;
      }
      case "org.vault.data_properties": {
        const panel = new DataPropertiesPanel(body, this.client, this.store);
        this.properties = panel;
        this.panels.set(instance.instanceId, panel);
        break;
      }
      default:
        body.textContent = `${instance.displayName} has no frontend panel`;
    }
  }

  private async closePanel(instanceId: string): Promise<void> {
    // Closing a panel destroys its instance, then the server layout drops it.
    await this.client.destroyInstance(instanceId);
    const panel = this.panels.get(instanceId);
    if (panel && "dispose" in panel) (panel as { dispose(): void }).dispose();
    this.panels.delete(instanceId);
    const instances = await this.client.listInstances();
    const layout = pruneLayout((await this.client.getLayout()).layout, instanceId);
    await this.client.setLayout(layout);
    this.renderLayout(layout, instances);
  }
}

export function defaultLayout(instances: InstanceInfo[]): LayoutNode | null {
  const views = instances.filter((instance) => instance.kind === "View");
  if (views.length === 0) return null;
  if (views.length === 1) return { type: "leaf", instance: views[0].instanceId };
  return {
    type: "split",
    orientation: "h",
    ratio: 0.5,
    children: [
      { type: "leaf", instance: views[0].instanceId },
      views.length === 2
        ? { type: "leaf", instance: views[1].instanceId }
        : { type: "tabs", instances: views.slice(1).map((view) => view.instanceId) },
    ],
  };
}

export function pruneLayout(layout: LayoutNode | null, instanceId: string): LayoutNode | null {
  if (!layout) return null;
  if (layout.type === "leaf") {
    return layout.instance === instanceId ? null : layout;
  }
  if (layout.type === "tabs") {
    const remaining = layout.instances.filter((id) => id !== instanceId);
    return remaining.length > 0 ? { ...layout, instances: remaining } : null;
  }
  const [a, b] = layout.children.map((child) => pruneLayout(child, instanceId));
  if (a && b) return { ...layout, children: [a, b] };
  return a ?? b;
}
