/** Wire protocol shared with the session service.
 *
 * Geometry frames (HTTP mesh fetch and stream frames alike) are packed as
 *
 *     u32le vertex_count | u32le triangle_count
 *     f32le x y z  * vertex_count
 *     u32le a b c  * triangle_count
 *
 * Stream messages are JSON: the client sends deform requests, the server
 * answers with a `revision` header followed by one binary geometry frame,
 * or an `error` message. Every outbound payload is validated here before
 * it leaves the client, so a malformed edit never reaches the wire. */

export type RigKind = "handles" | "skeleton" | "cage";

export interface MeshBuffers {
  readonly vertexCount: number;
  readonly triangleCount: number;
  /** xyz interleaved, length 3·vertexCount */
  readonly positions: Float32Array;
  /** abc interleaved, length 3·triangleCount */
  readonly triangles: Uint32Array;
}

export function decodeMeshFrame(buffer: ArrayBuffer): MeshBuffers {
  if (buffer.byteLength < 8) {
    throw new Error(`geometry frame too short for header: ${buffer.byteLength} bytes`);
  }
  const view = new DataView(buffer);
  const vertexCount = view.getUint32(0, true);
  const triangleCount = view.getUint32(4, true);
  const expected = 8 + 12 * vertexCount + 12 * triangleCount;
  if (buffer.byteLength !== expected) {
    throw new Error(
      `geometry frame holds ${buffer.byteLength} bytes, header implies ${expected}`,
    );
  }
  return {
    vertexCount,
    triangleCount,
    positions: new Float32Array(buffer.slice(8, 8 + 12 * vertexCount)),
    triangles: new Uint32Array(buffer.slice(8 + 12 * vertexCount)),
  };
}

export interface RevisionMessage {
  readonly type: "revision";
  readonly revision: number;
  readonly instance: string;
  readonly seq: number | null;
  /** seq numbers of requests coalesced away by this one */
  readonly superseded: readonly (number | null)[];
}

export interface ErrorMessage {
  readonly type: "error";
  readonly seq: number | null;
  readonly message: string;
}

export type StreamMessage = RevisionMessage | ErrorMessage;

export function parseStreamMessage(text: string): StreamMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new Error(`stream message is not JSON: ${text.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new Error("stream message must be a JSON object");
  }
  const msg = raw as Record<string, unknown>;
  if (msg.type === "revision") {
    if (typeof msg.revision !== "number" || typeof msg.instance !== "string") {
      throw new Error("revision message needs numeric revision and instance name");
    }
    return {
      type: "revision",
      revision: msg.revision,
      instance: msg.instance,
      seq: typeof msg.seq === "number" ? msg.seq : null,
      superseded: Array.isArray(msg.superseded) ? msg.superseded : [],
    };
  }
  if (msg.type === "error") {
    return {
      type: "error",
      seq: typeof msg.seq === "number" ? msg.seq : null,
      message: String(msg.message ?? "unknown stream error"),
    };
  }
  throw new Error(`unknown stream message type ${JSON.stringify(msg.type)}`);
}

export interface HandlesPayload {
  readonly targets: readonly (readonly number[])[];
}

export interface SkeletonPayload {
  /** joint name → unit quaternion [w, x, y, z] */
  readonly rotations: Readonly<Record<string, readonly number[]>>;
}

export interface CagePayload {
  readonly cage_positions: readonly (readonly number[])[];
}

export type DeformPayload = HandlesPayload | SkeletonPayload | CagePayload;

export class PayloadError extends Error {}

function requireFiniteTriplets(
  rows: unknown,
  what: string,
): asserts rows is readonly (readonly number[])[] {
  if (!Array.isArray(rows) || rows.length === 0) {
    throw new PayloadError(`${what} must be a non-empty array of [x, y, z] rows`);
  }
  for (const row of rows) {
    if (!Array.isArray(row) || row.length !== 3 || !row.every(Number.isFinite)) {
      throw new PayloadError(`${what} rows must be three finite numbers`);
    }
  }
}

/** Check a payload against the rig type it is about to drive.
 *
 * Mirrors what the service will accept; failing here keeps bad edits
 * client-side with a message the user can act on. */
export function validateDeformPayload(kind: RigKind, payload: unknown): DeformPayload {
  if (typeof payload !== "object" || payload === null) {
    throw new PayloadError("deform payload must be an object");
  }
  const body = payload as Record<string, unknown>;
  if (kind === "handles") {
    requireFiniteTriplets(body.targets, "handle targets");
    return { targets: body.targets };
  }
  if (kind === "cage") {
    requireFiniteTriplets(body.cage_positions, "cage positions");
    return { cage_positions: body.cage_positions };
  }
  const rotations = body.rotations;
  if (
    typeof rotations !== "object" ||
    rotations === null ||
    Object.keys(rotations).length === 0
  ) {
    throw new PayloadError("skeleton payload needs a non-empty rotations map");
  }
  for (const [joint, quat] of Object.entries(rotations)) {
    if (!Array.isArray(quat) || quat.length !== 4 || !quat.every(Number.isFinite)) {
      throw new PayloadError(
        `rotation for joint '${joint}' must be four finite numbers [w, x, y, z]`,
      );
    }
    const norm = Math.hypot(quat[0], quat[1], quat[2], quat[3]);
    if (Math.abs(norm - 1) > 1e-6) {
      throw new PayloadError(
        `rotation for joint '${joint}' must be a unit quaternion (|q| = ${norm.toFixed(6)})`,
      );
    }
  }
  return { rotations: rotations as SkeletonPayload["rotations"] };
}

export interface DeformMessage {
  readonly type: "deform";
  readonly instance: string;
  readonly seq: number;
  readonly [field: string]: unknown;
}

/** Assemble (and validate) one outbound deform request. */
export function deformMessage(
  instance: string,
  seq: number,
  kind: RigKind,
  payload: unknown,
): DeformMessage {
  const checked = validateDeformPayload(kind, payload);
  return { type: "deform", instance, seq, ...checked };
}

export interface HandlesRigRecord {
  readonly type: "handles";
  readonly vertex_ids: readonly number[];
  readonly targets: readonly (readonly number[])[];
}

export interface SkeletonJointRecord {
  readonly name: string;
  readonly parent: number | null;
  /** row-major 4×4 rest transform, 16 numbers */
  readonly local_rest: readonly number[];
}

export interface SkeletonRigRecord {
  readonly type: "skeleton";
  readonly joints: readonly SkeletonJointRecord[];
}

export interface CageRigRecord {
  readonly type: "cage";
  readonly positions: readonly (readonly number[])[];
  readonly triangles: readonly (readonly number[])[];
}

export type RigRecord = HandlesRigRecord | SkeletonRigRecord | CageRigRecord;
