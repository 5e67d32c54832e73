/**
 * Data hierarchy panel: the tree of datasets, drag sources for view
 * binding, a context menu listing compatible plugins, and grouping of
 * multi-selected rows.
 */

import { VaultClient } from "../client";
import { SessionStore } from "../store";
import { HierarchyNode } from "../protocol";

export class HierarchyPanel {
  list: HTMLElement;
  picked = new Set<string>(); // multi-selected rows
  onOpenDataset: ((guid: string) => void) | null = null;

  constructor(
    public root: HTMLElement,
    private client: VaultClient,
    private store: SessionStore,
  ) {
    this.list = document.createElement("div");
    this.list.className = "hierarchy";
    root.append(this.list);
    store.onHierarchy(() => this.render());
    this.render();
  }

  render(): void {
    this.list.textContent = "";
    const walk = (parent: string | null, depth: number) => {
      for (const node of this.store.children(parent)) {
        this.list.append(this.buildRow(node, depth));
        walk(node.guid, depth + 1);
      }
    };
    walk(null, 0);
  }

  private buildRow(node: HierarchyNode, depth: number): HTMLElement {
    const row = document.createElement("div");
    row.className = "hierarchy-row";
    row.dataset.guid = node.guid;
    row.style.paddingLeft = `${depth}em`;
    row.draggable = true;
    row.textContent = `${node.name} (${describe(node)})`;
    if (node.groupId) row.dataset.groupId = node.groupId;
    row.addEventListener("click", (event) => {
      if (event.shiftKey) {
        this.picked.add(node.guid);
      } else {
        this.picked = new Set([node.guid]);
        this.onOpenDataset?.(node.guid);
      }
      this.renderPickState();
    });
    row.addEventListener("dragstart", (event) => {
      event.dataTransfer?.setData("text/vault-dataset", node.guid);
    });
    row.addEventListener("contextmenu", (event) => {
      event.preventDefault();
      void this.openContextMenu(node, row);
    });
    return row;
  }

  private renderPickState(): void {
    for (const row of this.list.querySelectorAll<HTMLElement>(".hierarchy-row")) {
      row.classList.toggle("picked", this.picked.has(row.dataset.guid!));
    }
  }

  async openContextMenu(node: HierarchyNode, anchor: HTMLElement): Promise<HTMLElement> {
    this.root.querySelector(".context-menu")?.remove();
    const menu = document.createElement("div");
    menu.className = "context-menu";
    const plugins = await this.client.listPlugins({ dataset: node.guid });
    for (const plugin of plugins) {
      const item = document.createElement("button");
      item.className = "menu-item";
      item.dataset.pluginId = plugin.pluginId;
      item.textContent = plugin.displayName;
      item.addEventListener("click", () => {
        const inputs = this.picked.size > 1 ? [...this.picked] : [node.guid];
        void this.client.instantiate(plugin.pluginId, inputs);
        menu.remove();
      });
      menu.append(item);
    }
    if (this.picked.size > 1) {
      const group = document.createElement("button");
      group.className = "menu-item group";
      group.textContent = "group selected datasets";
      group.addEventListener("click", () => {
        void this.client.groupDatasets([...this.picked]);
        menu.remove();
      });
      menu.append(group);
    }
    anchor.append(menu);
    return menu;
  }
}

function describe(node: HierarchyNode): string {
  if (node.kind === "points") return `points, ${node.effectiveCount}x${node.numDims}`;
  if (node.kind === "image") return `image, ${node.width}x${node.height}`;
  return `clusters, ${node.clusters?.length ?? 0}`;
}
