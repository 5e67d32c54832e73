/**
 * Canvas scatterplot with linked brushing.
 *
 * The panel holds no authoritative state: point values arrive via
 * `data.fetch` (re-fetched on every DatasetDataChanged push, which is how
 * progressive embeddings animate) and the highlighted set always comes
 * from `selection.get` after a SelectionChanged push. Committing a brush
 * maps the screen geometry to item indices, applies the Boolean combine
 * mode, and issues exactly one `selection.set`.
 */

import { VaultClient } from "../client";
import { SessionStore } from "../store";
import { colormap, cssColor } from "../colormaps";
import {
  BrushTool,
  CombineMode,
  Point,
  combineSelection,
  pointsInPolygon,
  pointsInRect,
  pointsNearStroke,
} from "../geometry";

const HIGHLIGHT_COLOR = "rgb(214,39,40)"; // selected points read as red
const MAX_DIRECT_POINTS = 500_000; // beyond this, decimate for interactivity

interface ViewportTransform {
  xmin: number;
  ymin: number;
  xscale: number;
  yscale: number;
}

export class ScatterplotPanel {
  canvas: HTMLCanvasElement;
  dataset: string | null = null;
  renderCount = 0; // test hook
  tool: BrushTool = "rectangle";
  combine: CombineMode = "replace";
  pointSize = 5;
  colormapName = "viridis";
  colorDim: number | null = null;
  densityMode = false;
  densitySigma = 0.15;

  private xs = new Float32Array(0);
  private ys = new Float32Array(0);
  private colorValues: Float32Array | null = null;
  private selection = new Set<number>();
  private stroke: Point[] = [];
  private brushing = false;
  private unsubscribe: (() => void) | null = null;
  private density: { width: number; height: number; density: number[] } | null = null;

  constructor(
    public root: HTMLElement,
    private client: VaultClient,
    private store: SessionStore,
    public instanceId: string,
  ) {
    this.canvas = document.createElement("canvas");
    this.canvas.width = 480;
    this.canvas.height = 360;
    this.canvas.className = "scatterplot";
    root.append(this.canvas);
    this.canvas.addEventListener("mousedown", (event) => this.onDown(event));
    this.canvas.addEventListener("mousemove", (event) => this.onMove(event));
    this.canvas.addEventListener("mouseup", () => void this.commitBrush());
  }

  async bind(dataset: string): Promise<void> {
    this.unsubscribe?.();
    this.dataset = dataset;
    this.unsubscribe = this.store.onDataset(dataset, (event) => {
      if (event.kind === "DatasetDataChanged") {
        void this.refetch(); // progressive display: no user input needed
      } else if (event.kind === "DatasetSelectionChanged") {
        void this.refreshSelection();
      }
    });
    await this.client.bindView(this.instanceId, [dataset]);
    await this.refetch();
    await this.refreshSelection();
  }

  async refetch(): Promise<void> {
    if (!this.dataset) return;
    const node = this.store.node(this.dataset);
    const dims = [0, 1];
    if (node && (node.numDims ?? 2) < 2) {
      this.renderBindingHint();
      return;
    }
    const data = await this.client.fetchData(this.dataset, { dims, order: "dimension" });
    this.xs = data.values.slice(0, data.numItems);
    this.ys = data.values.slice(data.numItems, 2 * data.numItems);
    if (this.colorDim !== null) {
      const colors = await this.client.fetchData(this.dataset, {
        dims: [this.colorDim],
        order: "dimension",
      });
      this.colorValues = colors.values;
    }
    if (this.densityMode) {
      this.density = await this.client.fetchKde(this.dataset, this.densitySigma);
    }
    this.render();
  }

  async refreshSelection(): Promise<void> {
    if (!this.dataset) return;
    this.selection = new Set(await this.client.getSelection(this.dataset));
    this.render();
  }

  selectedIndices(): number[] {
    return [...this.selection].sort((a, b) => a - b);
  }

  private renderBindingHint(): void {
    this.root.dataset.hint = "bind a dataset with at least 2 dimensions";
    this.renderCount++;
  }

  private viewport(): ViewportTransform {
    let xmin = Infinity;
    let xmax = -Infinity;
    let ymin = Infinity;
    let ymax = -Infinity;
    for (let i = 0; i < this.xs.length; i++) {
      xmin = Math.min(xmin, this.xs[i]);
      xmax = Math.max(xmax, this.xs[i]);
      ymin = Math.min(ymin, this.ys[i]);
      ymax = Math.max(ymax, this.ys[i]);
    }
    if (!Number.isFinite(xmin)) {
      xmin = 0; xmax = 1; ymin = 0; ymax = 1;
    }
    const pad = 0.05;
    const xspan = xmax - xmin || 1;
    const yspan = ymax - ymin || 1;
    return {
      xmin: xmin - pad * xspan,
      ymin: ymin - pad * yspan,
      xscale: this.canvas.width / (xspan * (1 + 2 * pad)),
      yscale: this.canvas.height / (yspan * (1 + 2 * pad)),
    };
  }

  private toData(px: number, py: number): Point {
    const v = this.viewport();
    return { x: v.xmin + px / v.xscale, y: v.ymin + (this.canvas.height - py) / v.yscale };
  }

  render(): void {
    this.renderCount++;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return; // headless test environment: hooks still observable
    const v = this.viewport();
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.densityMode && this.density) {
      this.drawDensity(ctx);
    }
    const n = this.xs.length;
    const stride = n > MAX_DIRECT_POINTS ? Math.ceil(n / MAX_DIRECT_POINTS) : 1;
    let colorLow = 0;
    let colorSpan = 1;
    if (this.colorValues) {
      colorLow = Math.min(...this.colorValues);
      colorSpan = Math.max(...this.colorValues) - colorLow || 1;
    }
    for (let i = 0; i < n; i += stride) {
      const px = (this.xs[i] - v.xmin) * v.xscale;
      const py = this.canvas.height - (this.ys[i] - v.ymin) * v.yscale;
      if (this.selection.has(i)) {
        ctx.fillStyle = HIGHLIGHT_COLOR;
      } else if (this.colorValues) {
        const t = (this.colorValues[i] - colorLow) / colorSpan;
        ctx.fillStyle = cssColor(colormap(this.colormapName, t));
      } else {
        ctx.fillStyle = "rgb(80,80,90)";
      }
      ctx.beginPath();
      ctx.arc(px, py, this.pointSize / 2, 0, Math.PI * 2);
      ctx.fill();
    }
  }

  private drawDensity(ctx: CanvasRenderingContext2D): void {
    const grid = this.density!;
    const image = ctx.createImageData(grid.width, grid.height);
    const top = Math.max(...grid.density) || 1;
    for (let i = 0; i < grid.density.length; i++) {
      const [r, g, b] = colormap(this.colormapName, grid.density[i] / top);
      const row = Math.floor(i / grid.width);
      const flipped = (grid.height - 1 - row) * grid.width + (i % grid.width);
      image.data[flipped * 4] = r;
      image.data[flipped * 4 + 1] = g;
      image.data[flipped * 4 + 2] = b;
      image.data[flipped * 4 + 3] = 160;
    }
    ctx.putImageData(image, 0, 0);
  }

  // -- brushing -----------------------------------------------------------

  private onDown(event: MouseEvent): void {
    this.brushing = true;
    this.stroke = [this.toData(event.offsetX, event.offsetY)];
  }

  private onMove(event: MouseEvent): void {
    if (!this.brushing) return;
    this.stroke.push(this.toData(event.offsetX, event.offsetY));
  }

  /** Simulate a full brush gesture in data space (used by tests and tools). */
  brushGesture(points: Point[]): Promise<void> {
    this.stroke = [...points];
    this.brushing = true;
    return this.commitBrush();
  }

  async commitBrush(): Promise<void> {
    if (!this.brushing || !this.dataset) return;
    this.brushing = false;
    const stroke = this.stroke;
    this.stroke = [];
    if (stroke.length === 0) return;
    let hits: number[];
    if (this.tool === "rectangle") {
      const last = stroke[stroke.length - 1];
      hits = pointsInRect(this.xs, this.ys, {
        x0: stroke[0].x, y0: stroke[0].y, x1: last.x, y1: last.y,
      });
    } else if (this.tool === "lasso") {
      hits = pointsInPolygon(this.xs, this.ys, stroke);
    } else {
      const v = this.viewport();
      hits = pointsNearStroke(this.xs, this.ys, stroke, (this.pointSize * 2) / v.xscale);
    }
    const next = combineSelection(this.selection, hits, this.combine);
    await this.client.setSelection(this.dataset, next); // exactly one wire message
  }

  dispose(): void {
    this.unsubscribe?.();
  }
}
