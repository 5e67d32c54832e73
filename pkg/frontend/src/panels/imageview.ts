/**
 * Layer-based image viewer.
 *
 * Any dataset that resolves to image extents (an image annotation, or a
 * points/embedding dataset whose ancestor chain yields matching extents)
 * can be dropped in as a layer. Layers composite back-to-front with
 * per-layer opacity and a 1D colormap over one chosen dimension; pixels in
 * the shared selection are outlined. Compositing is a pure function over
 * fetched buffers, so tests can assert on it without a raster context.
 */

import { VaultClient } from "../client";
import { SessionStore } from "../store";
import { colormap } from "../colormaps";

export interface ImageLayer {
  dataset: string;
  opacity: number;
  colormapName: string;
  chosenDim: number;
}

const OUTLINE_RGBA: [number, number, number, number] = [214, 39, 40, 255];

export function compositeLayers(
  width: number,
  height: number,
  layers: { values: Float32Array; opacity: number; colormapName: string }[],
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(width * height * 4);
  for (const layer of layers) {
    let low = Infinity;
    let high = -Infinity;
    for (const value of layer.values) {
      if (value < low) low = value;
      if (value > high) high = value;
    }
    const span = high - low || 1;
    const alpha = Math.min(1, Math.max(0, layer.opacity));
    for (let pixel = 0; pixel < width * height; pixel++) {
      const [r, g, b] = colormap(layer.colormapName, (layer.values[pixel] - low) / span);
      const base = pixel * 4;
      out[base] = out[base] * (1 - alpha) + r * alpha;
      out[base + 1] = out[base + 1] * (1 - alpha) + g * alpha;
      out[base + 2] = out[base + 2] * (1 - alpha) + b * alpha;
      out[base + 3] = Math.max(out[base + 3], Math.round(alpha * 255));
    }
  }
  return out;
}

export class ImageViewPanel {
  canvas: HTMLCanvasElement;
  layers: ImageLayer[] = [];
  renderCount = 0; // test hook
  private extents: { width: number; height: number } | null = null;
  private buffers = new Map<string, Float32Array>();
  private highlighted = new Set<number>();
  private unsubscribes: (() => void)[] = [];

  constructor(
    public root: HTMLElement,
    private client: VaultClient,
    private store: SessionStore,
    public instanceId: string,
  ) {
    this.canvas = document.createElement("canvas");
    this.canvas.className = "image-view";
    root.append(this.canvas);
  }

  /** Add a dataset as the top layer; rejects datasets without extents. */
  async addLayer(dataset: string, options: Partial<ImageLayer> = {}): Promise<void> {
    const extents = this.store.imageExtents(dataset);
    if (!extents) {
      throw new Error("layer rejected: dataset does not resolve to image extents");
    }
    if (this.extents && (extents.width !== this.extents.width || extents.height !== this.extents.height)) {
      throw new Error("layer rejected: extents differ from the existing layers");
    }
    this.extents = extents;
    this.canvas.width = extents.width;
    this.canvas.height = extents.height;
    const layer: ImageLayer = {
      dataset,
      opacity: options.opacity ?? 1,
      colormapName: options.colormapName ?? "viridis",
      chosenDim: options.chosenDim ?? 0,
    };
    this.layers.push(layer);
    const target = this.pixelDataset(dataset);
    this.unsubscribes.push(
      this.store.onDataset(target, (event) => {
        if (event.kind === "DatasetSelectionChanged") void this.refreshSelection();
        if (event.kind === "DatasetDataChanged") void this.refetchLayer(layer);
      }),
    );
    if (target !== dataset) {
      this.unsubscribes.push(
        this.store.onDataset(dataset, (event) => {
          if (event.kind === "DatasetSelectionChanged") void this.refreshSelection();
          if (event.kind === "DatasetDataChanged") void this.refetchLayer(layer);
        }),
      );
    }
    await this.client.bindView(this.instanceId, this.layers.map((entry) => entry.dataset));
    await this.refetchLayer(layer);
    await this.refreshSelection();
  }

  /** Image annotations expose the parent's pixels; everything else is itself. */
  private pixelDataset(dataset: string): string {
    const node = this.store.node(dataset);
    if (node && node.kind === "image" && node.parentGuid) return node.parentGuid;
    return dataset;
  }

  private async refetchLayer(layer: ImageLayer): Promise<void> {
    const data = await this.client.fetchData(layer.dataset, {
      dims: [layer.chosenDim],
      order: "dimension",
    });
    this.buffers.set(layer.dataset, data.values);
    this.render();
  }

  async refreshSelection(): Promise<void> {
    if (this.layers.length === 0) return;
    const target = this.pixelDataset(this.layers[0].dataset);
    this.highlighted = new Set(await this.client.getSelection(target));
    this.render();
  }

  /** Exactly the pixel indices the panel outlines (test hook). */
  highlightedPixels(): number[] {
    return [...this.highlighted].sort((a, b) => a - b);
  }

  composited(): Uint8ClampedArray<ArrayBuffer> | null {
    if (!this.extents) return null;
    const ready = this.layers
      .filter((layer) => this.buffers.has(layer.dataset))
      .map((layer) => ({
        values: this.buffers.get(layer.dataset)!,
        opacity: layer.opacity,
        colormapName: layer.colormapName,
      }));
    return compositeLayers(this.extents.width, this.extents.height, ready);
  }

  render(): void {
    this.renderCount++;
    const buffer = this.composited();
    if (!buffer || !this.extents) return;
    for (const pixel of this.highlighted) {
      const base = pixel * 4;
      if (base + 3 < buffer.length) {
        buffer.set(OUTLINE_RGBA, base);
      }
    }
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.putImageData(new ImageData(buffer, this.extents.width, this.extents.height), 0, 0);
  }

  dispose(): void {
    for (const unsubscribe of this.unsubscribes) unsubscribe();
  }
}
