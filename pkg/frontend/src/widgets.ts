/**
 * Action widgets: one DOM control set per action kind, always showing the
 * server's value. A decimal renders as spinbox + slider, two views of one
 * value. The label is underlined when the action may publish or connect,
 * italic while linked; clicking it opens the publish/connect/disconnect
 * dialog. Widgets with `visible: false` are not rendered at all.
 */

import { VaultClient } from "./client";
import { SessionStore } from "./store";
import { ActionNode } from "./protocol";
import { COLORMAP_NAMES } from "./colormaps";

export class ActionWidget {
  element: HTMLElement;
  private label: HTMLElement | null = null;
  private inputs: (HTMLInputElement | HTMLSelectElement)[] = [];
  private node: ActionNode;

  constructor(
    private client: VaultClient,
    private store: SessionStore,
    node: ActionNode,
  ) {
    this.node = node;
    this.element = this.build();
    store.onAction(node.id, (payload) => this.onServerChange(payload));
  }

  private build(): HTMLElement {
    const node = this.node;
    if (node.kind === "Group") {
      const group = document.createElement("fieldset");
      group.className = "action-group";
      const legend = document.createElement("legend");
      legend.textContent = node.name;
      group.append(legend);
      for (const child of node.children) {
        if (!child.flags.visible) continue;
        group.append(new ActionWidget(this.client, this.store, child).element);
      }
      return group;
    }
    const row = document.createElement("div");
    row.className = "action-row";
    row.dataset.actionId = node.id;
    if (node.kind !== "Trigger") {
      row.append(this.buildLabel());
    }
    this.appendControls(row);
    if (!node.flags.enabled) {
      for (const input of this.inputs) input.disabled = true;
    }
    return row;
  }

  private buildLabel(): HTMLElement {
    const node = this.node;
    const label = document.createElement("span");
    label.className = "action-label";
    label.textContent = node.name;
    const linkable = node.flags.mayPublish || node.flags.mayConnect;
    label.classList.toggle("linkable", linkable);
    label.classList.toggle("linked", node.link !== null);
    if (linkable) {
      label.addEventListener("click", () => this.openLinkDialog());
    }
    this.label = label;
    return label;
  }

  private appendControls(row: HTMLElement): void {
    const node = this.node;
    const value = node.value ?? {};
    switch (node.kind) {
      case "Decimal": {
        const slider = document.createElement("input");
        slider.type = "range";
        slider.min = String(value.min);
        slider.max = String(value.max);
        slider.step = String(value.step ?? 0.01);
        slider.value = String(value.value);
        const spin = document.createElement("input");
        spin.type = "number";
        spin.min = String(value.min);
        spin.max = String(value.max);
        spin.step = String(value.step ?? 0.01);
        spin.value = String(value.value);
        const commit = (raw: string) => {
          const parsed = Number(raw);
          if (!Number.isFinite(parsed)) return;
          slider.value = raw;
          spin.value = raw;
          void this.client.setAction(node.id, parsed);
        };
        slider.addEventListener("input", () => commit(slider.value));
        spin.addEventListener("change", () => commit(spin.value));
        this.inputs = [slider, spin];
        row.append(slider, spin);
        break;
      }
      case "Integral": {
        const spin = document.createElement("input");
        spin.type = "number";
        spin.min = String(value.min);
        spin.max = String(value.max);
        spin.step = "1";
        spin.value = String(value.value);
        spin.addEventListener("change", () => {
          void this.client.setAction(node.id, Math.round(Number(spin.value)));
        });
        this.inputs = [spin];
        row.append(spin);
        break;
      }
      case "String": {
        const text = document.createElement("input");
        text.type = "text";
        text.value = String(value.value ?? "");
        text.addEventListener("change", () => void this.client.setAction(node.id, text.value));
        this.inputs = [text];
        row.append(text);
        break;
      }
      case "Option": {
        const select = document.createElement("select");
        for (const choice of (value.choices as string[]) ?? []) {
          const option = document.createElement("option");
          option.textContent = choice;
          select.append(option);
        }
        select.selectedIndex = Number(value.currentIndex ?? -1);
        select.addEventListener("change", () => {
          void this.client.setAction(node.id, select.selectedIndex);
        });
        this.inputs = [select];
        row.append(select);
        break;
      }
      case "Toggle": {
        const box = document.createElement("input");
        box.type = "checkbox";
        box.checked = !!value.value;
        box.addEventListener("change", () => void this.client.setAction(node.id, box.checked));
        this.inputs = [box];
        row.append(box);
        break;
      }
      case "Trigger": {
        const button = document.createElement("button");
        button.textContent = this.node.name;
        button.addEventListener("click", () => void this.client.fireAction(node.id));
        row.append(this.buildLabel());
        this.label!.style.display = "none"; // dialog anchor only
        row.append(button);
        break;
      }
      case "Color": {
        const rgba = (value.rgba as number[]) ?? [0, 0, 0, 255];
        const picker = document.createElement("input");
        picker.type = "color";
        picker.value = `#${rgba.slice(0, 3).map((c) => c.toString(16).padStart(2, "0")).join("")}`;
        picker.addEventListener("change", () => {
          const hex = picker.value;
          const channels = [1, 3, 5].map((i) => parseInt(hex.slice(i, i + 2), 16));
          void this.client.setAction(node.id, [...channels, rgba[3] ?? 255]);
        });
        this.inputs = [picker];
        row.append(picker);
        break;
      }
      case "ColorMap1D": {
        const select = document.createElement("select");
        for (const name of COLORMAP_NAMES) {
          const option = document.createElement("option");
          option.textContent = name;
          select.append(option);
        }
        select.selectedIndex = Math.max(0, COLORMAP_NAMES.indexOf(String(value.name)));
        select.addEventListener("change", () => {
          void this.client.setAction(node.id, COLORMAP_NAMES[select.selectedIndex]);
        });
        this.inputs = [select];
        row.append(select);
        break;
      }
      case "DimensionPicker": {
        const picked = document.createElement("input");
        picked.type = "text";
        picked.placeholder = "dim indices, e.g. 0,1,4";
        picked.value = ((value.selected as number[]) ?? []).join(",");
        picked.addEventListener("change", () => {
          const selected = picked.value
            .split(",")
            .map((part) => parseInt(part.trim(), 10))
            .filter((index) => Number.isFinite(index));
          void this.client.setAction(node.id, { dataset: value.dataset ?? "", selected });
        });
        this.inputs = [picked];
        row.append(picked);
        break;
      }
    }
  }

  /** All displayed values, for the coherence test hook. */
  displayedValues(): string[] {
    return this.inputs.map((input) =>
      input instanceof HTMLSelectElement ? String(input.selectedIndex) : input.value,
    );
  }

  get linked(): boolean {
    return this.node.link !== null;
  }

  private onServerChange(payload: Record<string, any>): void {
    if (payload.fired) return;
    const value = payload.value ?? {};
    this.node = { ...this.node, value };
    switch (this.node.kind) {
      case "Decimal":
      case "Integral":
      case "String":
        for (const input of this.inputs) (input as HTMLInputElement).value = String(value.value);
        break;
      case "Option":
        (this.inputs[0] as HTMLSelectElement).selectedIndex = Number(value.currentIndex);
        break;
      case "Toggle":
        (this.inputs[0] as HTMLInputElement).checked = !!value.value;
        break;
      case "ColorMap1D":
        (this.inputs[0] as HTMLSelectElement).selectedIndex =
          Math.max(0, COLORMAP_NAMES.indexOf(String(value.name)));
        break;
      case "DimensionPicker":
        (this.inputs[0] as HTMLInputElement).value = ((value.selected as number[]) ?? []).join(",");
        break;
      default:
        break;
    }
  }

  private setLinkState(link: string | null): void {
    this.node = { ...this.node, link };
    this.label?.classList.toggle("linked", link !== null);
  }

  async openLinkDialog(): Promise<void> {
    const dialog = document.createElement("div");
    dialog.className = "link-dialog";
    const close = () => dialog.remove();

    if (this.node.link !== null) {
      if (this.node.flags.mayDisconnect) {
        const disconnect = document.createElement("button");
        disconnect.className = "disconnect";
        disconnect.textContent = `disconnect from "${this.node.link}"`;
        disconnect.addEventListener("click", () => {
          void this.client.disconnectAction(this.node.id).then(() => {
            this.setLinkState(null);
            close();
          });
        });
        dialog.append(disconnect);
      }
    } else {
      if (this.node.flags.mayPublish) {
        const name = document.createElement("input");
        name.type = "text";
        name.className = "publish-name";
        name.placeholder = "public name";
        const publish = document.createElement("button");
        publish.className = "publish";
        publish.textContent = "publish";
        publish.addEventListener("click", () => {
          if (!name.value) return;
          void this.client.publishAction(this.node.id, name.value).then(() => {
            this.setLinkState(name.value);
            close();
          });
        });
        dialog.append(name, publish);
      }
      if (this.node.flags.mayConnect) {
        const entries = await this.client.actionPool();
        for (const entry of entries.filter((candidate) => candidate.kind === this.node.kind)) {
          const connect = document.createElement("button");
          connect.className = "connect";
          connect.textContent = `connect to "${entry.publicName}"`;
          connect.addEventListener("click", () => {
            void this.client.connectAction(this.node.id, entry.publicName).then(() => {
              this.setLinkState(entry.publicName);
              close();
            });
          });
          dialog.append(connect);
        }
      }
    }
    this.element.append(dialog);
  }
}
