/**
 * Protocol client: request/response correlation, push routing, and bulk
 * data reassembly over any transport (a real WebSocket in the browser, a
 * scripted fake in tests).
 */

import {
  ActionNode,
  BinaryFrame,
  ChunkAssembler,
  CoreEvent,
  HierarchyNode,
  InstanceInfo,
  LayoutNode,
  PluginInfo,
  PoolEntry,
  parseFrame,
} from "./protocol";

export interface Transport {
  send(text: string): void;
  onText(handler: (text: string) => void): void;
  onBinary(handler: (data: ArrayBuffer) => void): void;
}

export class WebSocketTransport implements Transport {
  private textHandler: ((text: string) => void) | null = null;
  private binaryHandler: ((data: ArrayBuffer) => void) | null = null;
  private queue: string[] = [];
  private open = false;

  constructor(private socket: WebSocket) {
    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      this.open = true;
      for (const text of this.queue.splice(0)) socket.send(text);
    };
    socket.onmessage = (event) => {
      if (typeof event.data === "string") {
        this.textHandler?.(event.data);
      } else {
        this.binaryHandler?.(event.data as ArrayBuffer);
      }
    };
  }

  send(text: string): void {
    if (this.open) {
      this.socket.send(text);
    } else {
      this.queue.push(text);
    }
  }

  onText(handler: (text: string) => void): void {
    this.textHandler = handler;
  }

  onBinary(handler: (data: ArrayBuffer) => void): void {
    this.binaryHandler = handler;
  }
}

interface Pending {
  resolve(payload: Record<string, any>): void;
  reject(error: Error): void;
}

export interface FetchedData {
  values: Float32Array;
  numItems: number;
  numDims: number;
  order: "item" | "dimension";
  dimNames: string[];
}

type PushHandler = (payload: Record<string, any>) => void;

export class VaultClient {
  private nextRequestId = 1;
  private pending = new Map<number, Pending>();
  private pushHandlers = new Map<string, PushHandler[]>();
  private assemblers = new Map<number, { assembler: ChunkAssembler; done(values: Float32Array): void }>();
  private strayFrames = new Map<number, BinaryFrame[]>();

  constructor(private transport: Transport) {
    transport.onText((text) => this.handleText(text));
    transport.onBinary((data) => this.handleBinary(data));
  }

  onPush(type: string, handler: PushHandler): void {
    const handlers = this.pushHandlers.get(type) ?? [];
    handlers.push(handler);
    this.pushHandlers.set(type, handlers);
  }

  request(type: string, payload: Record<string, any> = {}): Promise<Record<string, any>> {
    const requestId = this.nextRequestId++;
    const promise = new Promise<Record<string, any>>((resolve, reject) => {
      this.pending.set(requestId, { resolve, reject });
    });
    this.transport.send(JSON.stringify({ type, requestId, payload }));
    return promise;
  }

  private handleText(text: string): void {
    const message = JSON.parse(text);
    if (message.type === "response" || message.type === "error") {
      const pending = this.pending.get(message.requestId);
      if (!pending) return;
      this.pending.delete(message.requestId);
      if (message.type === "response") {
        pending.resolve(message.payload ?? {});
      } else {
        pending.reject(new Error(message.payload?.message ?? "request failed"));
      }
      return;
    }
    for (const handler of this.pushHandlers.get(message.type) ?? []) {
      handler(message.payload ?? {});
    }
  }

  private handleBinary(data: ArrayBuffer): void {
    const frame = parseFrame(data);
    const entry = this.assemblers.get(frame.channelId);
    if (!entry) {
      // Frames may outrun the channel announcement on a scripted transport.
      const stray = this.strayFrames.get(frame.channelId) ?? [];
      stray.push(frame);
      this.strayFrames.set(frame.channelId, stray);
      return;
    }
    const joined = entry.assembler.add(frame);
    if (joined) {
      this.assemblers.delete(frame.channelId);
      entry.done(joined);
    }
  }

  async fetchData(
    dataset: string,
    options: { dims?: number[]; items?: number[]; order?: "item" | "dimension" } = {},
  ): Promise<FetchedData> {
    const payload: Record<string, any> = { dataset, ...options };
    const reply = await this.request("data.fetch", payload);
    const values = await new Promise<Float32Array>((resolve) => {
      const assembler = new ChunkAssembler(reply.chunks);
      this.assemblers.set(reply.channelId, { assembler, done: resolve });
      for (const frame of this.strayFrames.get(reply.channelId) ?? []) {
        const joined = assembler.add(frame);
        if (joined) {
          this.assemblers.delete(reply.channelId);
          resolve(joined);
        }
      }
      this.strayFrames.delete(reply.channelId);
    });
    return {
      values,
      numItems: reply.numItems,
      numDims: reply.numDims,
      order: reply.order,
      dimNames: reply.dimNames,
    };
  }

  // -- typed conveniences over request() ---------------------------------

  async hierarchy(): Promise<HierarchyNode[]> {
    return (await this.request("hierarchy.list")).nodes;
  }

  async setSelection(dataset: string, indices: number[]): Promise<void> {
    await this.request("selection.set", { dataset, indices });
  }

  async getSelection(dataset: string): Promise<number[]> {
    return (await this.request("selection.get", { dataset })).indices;
  }

  async listActions(target: { instance?: string; dataset?: string }): Promise<{ action: ActionNode }[]> {
    return (await this.request("action.list", target)).actions;
  }

  async setAction(action: string, value: unknown): Promise<void> {
    await this.request("action.set", { action, value });
  }

  async fireAction(action: string): Promise<void> {
    await this.request("action.fire", { action });
  }

  async publishAction(action: string, publicName: string): Promise<void> {
    await this.request("action.publish", { action, publicName });
  }

  async connectAction(action: string, publicName: string): Promise<void> {
    await this.request("action.connect", { action, publicName });
  }

  async disconnectAction(action: string): Promise<void> {
    await this.request("action.disconnect", { action });
  }

  async actionPool(): Promise<PoolEntry[]> {
    return (await this.request("action.pool")).entries;
  }

  async listPlugins(filter: { dataset?: string; kind?: string } = {}): Promise<PluginInfo[]> {
    return (await this.request("plugin.list", filter)).plugins;
  }

  async listInstances(): Promise<InstanceInfo[]> {
    return (await this.request("plugin.instances")).instances;
  }

  async instantiate(pluginId: string, inputs: string[]): Promise<{ instanceId: string; outputGuid: string | null }> {
    const reply = await this.request("plugin.instantiate", { pluginId, inputs });
    return { instanceId: reply.instanceId, outputGuid: reply.outputGuid };
  }

  async control(instanceId: string, command: "start" | "pause" | "resume" | "cancel"): Promise<string> {
    return (await this.request("plugin.control", { instanceId, command })).state;
  }

  async destroyInstance(instanceId: string): Promise<void> {
    await this.request("plugin.destroy", { instanceId });
  }

  async bindView(instanceId: string, datasets: string[]): Promise<void> {
    await this.request("view.bind", { instanceId, datasets });
  }

  async groupDatasets(datasets: string[]): Promise<string> {
    return (await this.request("dataset.group", { datasets })).groupId;
  }

  async getLayout(): Promise<{ layout: LayoutNode | null; locked: boolean }> {
    const reply = await this.request("layout.get");
    return { layout: reply.layout ?? null, locked: !!reply.locked };
  }

  async setLayout(layout: LayoutNode | null): Promise<void> {
    await this.request("layout.set", { layout });
  }

  async fetchKde(dataset: string, sigma: number, resolution = 256): Promise<{
    width: number; height: number; bounds: number[]; density: number[];
  }> {
    const reply = await this.request("data.kde", { dataset, sigma, resolution });
    return reply as any;
  }
}

export function pushEvent(handler: (event: CoreEvent) => void): PushHandler {
  return (payload) => handler(payload as unknown as CoreEvent);
}
