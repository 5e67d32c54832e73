/**
 * Dockable layout: split/tabs/leaf nodes rendered to nested flex
 * containers. Every leaf hosts one panel with a title bar. When the
 * workspace is locked, the drag handles, close buttons, and split
 * affordances are absent from the DOM entirely.
 */

import { LayoutNode } from "./protocol";

export interface PanelHost {
  instanceId: string;
  body: HTMLElement;
}

export class DockLayout {
  hosts = new Map<string, PanelHost>();

  constructor(
    public root: HTMLElement,
    public locked: boolean,
    private onClose: (instanceId: string) => void,
  ) {}

  render(layout: LayoutNode | null, titles: Map<string, string>): void {
    this.root.textContent = "";
    this.hosts.clear();
    if (!layout) return;
    this.root.append(this.build(layout, titles));
  }

  private build(node: LayoutNode, titles: Map<string, string>): HTMLElement {
    if (node.type === "split") {
      const split = document.createElement("div");
      split.className = `dock-split ${node.orientation === "h" ? "horizontal" : "vertical"}`;
      const [first, second] = node.children;
      const a = this.build(first, titles);
      const b = this.build(second, titles);
      a.style.flexGrow = String(node.ratio);
      b.style.flexGrow = String(1 - node.ratio);
      if (!this.locked) {
        const divider = document.createElement("div");
        divider.className = "dock-divider";
        split.append(a, divider, b);
      } else {
        split.append(a, b);
      }
      return split;
    }
    if (node.type === "tabs") {
      const tabs = document.createElement("div");
      tabs.className = "dock-tabs";
      const bar = document.createElement("div");
      bar.className = "tab-bar";
      tabs.append(bar);
      node.instances.forEach((instanceId, index) => {
        const tab = document.createElement("button");
        tab.className = "tab";
        tab.textContent = titles.get(instanceId) ?? instanceId.slice(0, 8);
        bar.append(tab);
        const pane = this.buildLeaf(instanceId, titles);
        pane.style.display = index === 0 ? "" : "none";
        tab.addEventListener("click", () => {
          for (const sibling of tabs.querySelectorAll<HTMLElement>(".dock-leaf")) {
            sibling.style.display = "none";
          }
          pane.style.display = "";
        });
        tabs.append(pane);
      });
      return tabs;
    }
    return this.buildLeaf(node.instance, titles);
  }

  private buildLeaf(instanceId: string, titles: Map<string, string>): HTMLElement {
    const leaf = document.createElement("div");
    leaf.className = "dock-leaf";
    leaf.dataset.instanceId = instanceId;
    const bar = document.createElement("div");
    bar.className = "title-bar";
    const title = document.createElement("span");
    title.textContent = titles.get(instanceId) ?? instanceId.slice(0, 8);
    bar.append(title);
    if (!this.locked) {
      const handle = document.createElement("span");
      handle.className = "drag-handle";
      handle.draggable = true;
      bar.append(handle);
      const close = document.createElement("button");
      close.className = "close";
      close.textContent = "x";
      close.addEventListener("click", () => this.onClose(instanceId));
      bar.append(close);
    }
    const body = document.createElement("div");
    body.className = "panel-body";
    leaf.append(bar, body);
    this.hosts.set(instanceId, { instanceId, body });
    return leaf;
  }
}
