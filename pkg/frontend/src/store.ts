/**
 * Client-side mirror of server state.
 *
 * The server is authoritative for everything: hierarchy, selections,
 * action values, layout. This store only caches for rendering and routes
 * pushes to interested panels; no widget or panel keeps authoritative
 * state of its own.
 */

import { VaultClient } from "./client";
import { CoreEvent, HierarchyNode } from "./protocol";

type Listener = () => void;
type EventListener = (event: CoreEvent) => void;
type ActionListener = (payload: Record<string, any>) => void;

export class SessionStore {
  nodes = new Map<string, HierarchyNode>();
  order: string[] = [];
  private hierarchyListeners: Listener[] = [];
  private datasetListeners = new Map<string, EventListener[]>();
  private actionListeners = new Map<string, ActionListener[]>();
  private anyActionListeners: ActionListener[] = [];

  constructor(public client: VaultClient) {
    client.onPush("hierarchy", (payload) => {
      this.applyNodes(payload.nodes ?? []);
    });
    client.onPush("event", (payload) => {
      this.onEvent(payload as unknown as CoreEvent);
    });
    client.onPush("actionChanged", (payload) => {
      for (const listener of this.actionListeners.get(payload.action) ?? []) {
        listener(payload);
      }
      for (const listener of this.anyActionListeners) listener(payload);
    });
  }

  private applyNodes(nodes: HierarchyNode[]): void {
    this.nodes.clear();
    this.order = [];
    for (const node of nodes) {
      this.nodes.set(node.guid, node);
      this.order.push(node.guid);
    }
    for (const listener of this.hierarchyListeners) listener();
  }

  private onEvent(event: CoreEvent): void {
    if (
      event.kind === "DatasetAdded" ||
      event.kind === "DatasetRemoved" ||
      event.kind === "DatasetRenamed"
    ) {
      void this.refresh();
    }
    for (const listener of this.datasetListeners.get(event.dataset) ?? []) {
      listener(event);
    }
  }

  async refresh(): Promise<void> {
    this.applyNodes(await this.client.hierarchy());
  }

  node(guid: string): HierarchyNode | undefined {
    return this.nodes.get(guid);
  }

  children(guid: string | null): HierarchyNode[] {
    return this.order
      .map((id) => this.nodes.get(id)!)
      .filter((node) => node.parentGuid === guid);
  }

  onHierarchy(listener: Listener): void {
    this.hierarchyListeners.push(listener);
  }

  onDataset(guid: string, listener: EventListener): () => void {
    const listeners = this.datasetListeners.get(guid) ?? [];
    listeners.push(listener);
    this.datasetListeners.set(guid, listeners);
    return () => {
      const current = this.datasetListeners.get(guid) ?? [];
      const index = current.indexOf(listener);
      if (index >= 0) current.splice(index, 1);
    };
  }

  onAction(actionId: string, listener: ActionListener): void {
    const listeners = this.actionListeners.get(actionId) ?? [];
    listeners.push(listener);
    this.actionListeners.set(actionId, listeners);
  }

  onAnyAction(listener: ActionListener): void {
    this.anyActionListeners.push(listener);
  }

  /**
   * Resolve image extents for a layer dataset: the dataset itself if it is
   * an image annotation, else the nearest ancestor (including itself) that
   * has an image child whose pixel count matches the dataset's item count.
   */
  imageExtents(guid: string): { width: number; height: number } | null {
    const node = this.nodes.get(guid);
    if (!node) return null;
    if (node.kind === "image" && node.width && node.height) {
      return { width: node.width, height: node.height };
    }
    let ancestor: HierarchyNode | undefined = node;
    while (ancestor) {
      for (const child of this.children(ancestor.guid)) {
        if (
          child.kind === "image" &&
          child.width !== undefined &&
          child.height !== undefined &&
          child.width * child.height === node.effectiveCount
        ) {
          return { width: child.width, height: child.height };
        }
      }
      ancestor = ancestor.parentGuid ? this.nodes.get(ancestor.parentGuid) : undefined;
    }
    return null;
  }
}
