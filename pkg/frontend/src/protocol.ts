/**
 * Wire protocol types and the binary frame codec.
 *
 * Text frames are JSON `{type, requestId?, payload}`; binary frames carry a
 * 16-byte header (channelId u64 LE, chunkIndex u32 LE, flags u32 LE) followed
 * by little-endian f32 values. Flag bit 0 marks a channel's final chunk.
 * Chunks may arrive in any order and are reassembled by index.
 */

export const FRAME_HEADER_BYTES = 16;
export const FLAG_LAST_CHUNK = 1;

export type PayloadKind = "points" | "clusters" | "image";

export interface ClusterInfo {
  name: string;
  color: [number, number, number, number];
  size: number;
  members: number[];
}

export interface HierarchyNode {
  guid: string;
  name: string;
  kind: PayloadKind;
  parentGuid: string | null;
  derived: boolean;
  effectiveCount: number;
  groupId: string | null;
  properties: Record<string, string>;
  attachedActions: string[];
  numDims?: number;
  dimNames?: string[];
  width?: number;
  height?: number;
  clusters?: ClusterInfo[];
}

export type EventKindName =
  | "DatasetAdded"
  | "DatasetDataChanged"
  | "DatasetSelectionChanged"
  | "DatasetRemoved"
  | "DatasetRenamed";

export interface CoreEvent {
  kind: EventKindName;
  dataset: string;
  seq: number;
}

export interface PermissionFlags {
  enabled: boolean;
  visible: boolean;
  mayPublish: boolean;
  mayConnect: boolean;
  mayDisconnect: boolean;
}

export type ActionKindName =
  | "Decimal"
  | "Integral"
  | "String"
  | "Option"
  | "Toggle"
  | "Trigger"
  | "Color"
  | "ColorMap1D"
  | "DimensionPicker"
  | "Group";

export interface ActionNode {
  id: string;
  kind: ActionKindName;
  name: string;
  flags: PermissionFlags;
  value: Record<string, unknown> | null;
  link: string | null;
  children: ActionNode[];
}

export interface InstanceInfo {
  instanceId: string;
  pluginId: string;
  kind: string;
  displayName: string;
  inputs: string[];
  output: string | null;
  state: string;
}

export interface PluginInfo {
  pluginId: string;
  kind: string;
  displayName: string;
  acceptedInputKinds: string[];
  version: string;
}

export interface PoolEntry {
  publicName: string;
  kind: ActionKindName;
  value: Record<string, unknown>;
}

export type LayoutNode =
  | { type: "split"; orientation: "h" | "v"; ratio: number; children: [LayoutNode, LayoutNode] }
  | { type: "tabs"; instances: string[] }
  | { type: "leaf"; instance: string };

export interface BinaryFrame {
  channelId: number;
  chunkIndex: number;
  flags: number;
  values: Float32Array;
}

export function parseFrame(buffer: ArrayBuffer): BinaryFrame {
  if (buffer.byteLength < FRAME_HEADER_BYTES) {
    throw new Error(`binary frame too short: ${buffer.byteLength} bytes`);
  }
  const view = new DataView(buffer);
  const channelId = Number(view.getBigUint64(0, true));
  const chunkIndex = view.getUint32(8, true);
  const flags = view.getUint32(12, true);
  const values = new Float32Array(buffer.slice(FRAME_HEADER_BYTES));
  return { channelId, chunkIndex, flags, values };
}

/** Reassembles one channel's chunks, tolerating arbitrary arrival order. */
export class ChunkAssembler {
  private pieces = new Map<number, Float32Array>();
  private expected: number;

  constructor(expectedChunks: number) {
    this.expected = expectedChunks;
  }

  add(frame: BinaryFrame): Float32Array | null {
    this.pieces.set(frame.chunkIndex, frame.values);
    if (this.pieces.size < this.expected) {
      return null;
    }
    let total = 0;
    for (const piece of this.pieces.values()) total += piece.length;
    const joined = new Float32Array(total);
    let offset = 0;
    for (let index = 0; index < this.expected; index++) {
      const piece = this.pieces.get(index);
      if (!piece) throw new Error(`missing chunk ${index}`);
      joined.set(piece, offset);
      offset += piece.length;
    }
    return joined;
  }
}
