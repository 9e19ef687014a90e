/** Network plumbing: a thin typed client for the session endpoints plus the
 * live stream. Both the fetch function and the WebSocket constructor are
 * injectable, so the same code runs in a browser, under Node, and against
 * fakes in tests. */

import type { MeshBuffers, RigRecord, StreamMessage } from "./protocol.js";
import { decodeMeshFrame, parseStreamMessage } from "./protocol.js";

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
  arrayBuffer(): Promise<ArrayBuffer>;
}>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface SessionInfo {
  readonly id: string;
  readonly revision: number;
  readonly instances: readonly string[];
  readonly solves: number;
  readonly dropped: number;
}

export interface RenderArtifacts {
  readonly revision: number;
  /** server-relative artifact paths */
  readonly color: string;
  readonly depth: string;
  readonly mask: string;
}

async function readDetail(response: {
  json(): Promise<unknown>;
}): Promise<string | null> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return typeof body?.detail === "string" ? body.detail : null;
  } catch {
    return null;
  }
}

export class SessionApi {
  readonly baseUrl: string;

  constructor(
    baseUrl: string,
    private readonly fetchLike: FetchLike = globalThis.fetch as FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
    rawBody?: string,
  ) {
    const init: Parameters<FetchLike>[1] = { method };
    if (rawBody !== undefined) {
      init.body = rawBody;
      init.headers = { "content-type": "text/plain" };
    } else if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "content-type": "application/json" };
    }
    const response = await this.fetchLike(this.baseUrl + path, init);
    if (!response.ok) {
      const detail = await readDetail(response);
      throw new ApiError(
        response.status,
        detail ?? `${method} ${path} failed with status ${response.status}`,
      );
    }
    return response;
  }

  async createSession(): Promise<string> {
    const response = await this.request("POST", "/sessions");
    const body = (await response.json()) as { id: string };
    return body.id;
  }

  async info(sid: string): Promise<SessionInfo> {
    const response = await this.request("GET", `/sessions/${sid}`);
    return (await response.json()) as SessionInfo;
  }

  async uploadMesh(
    sid: string,
    objText: string,
  ): Promise<{ instance: string; revision: number }> {
    const response = await this.request(
      "POST",
      `/sessions/${sid}/meshes`,
      undefined,
      objText,
    );
    return (await response.json()) as { instance: string; revision: number };
  }

  async attachRig(
    sid: string,
    instance: string,
    record: RigRecord,
  ): Promise<{ rig: string; revision: number }> {
    const response = await this.request(
      "POST",
      `/sessions/${sid}/instances/${instance}/rig`,
      record,
    );
    return (await response.json()) as { rig: string; revision: number };
  }

  async deform(
    sid: string,
    instance: string,
    payload: unknown,
  ): Promise<number> {
    const response = await this.request(
      "POST",
      `/sessions/${sid}/instances/${instance}/deform`,
      payload,
    );
    const body = (await response.json()) as { revision: number };
    return body.revision;
  }

  async fetchMesh(
    sid: string,
    instance: string,
    revision?: number,
  ): Promise<MeshBuffers> {
    const query = revision === undefined ? "" : `?rev=${revision}`;
    const response = await this.request(
      "GET",
      `/sessions/${sid}/instances/${instance}/mesh${query}`,
    );
    return decodeMeshFrame(await response.arrayBuffer());
  }

  async render(sid: string): Promise<RenderArtifacts> {
    const response = await this.request("POST", `/sessions/${sid}/render`);
    return (await response.json()) as RenderArtifacts;
  }

  async enhance(
    sid: string,
    body?: { predictor?: string; prompt?: string; config?: unknown },
  ): Promise<{ steps: number; predictor: string; audit: string; enhanced: string }> {
    const response = await this.request("POST", `/sessions/${sid}/enhance`, body ?? {});
    return (await response.json()) as {
      steps: number;
      predictor: string;
      audit: string;
      enhanced: string;
    };
  }

  /** Bytes of a server-relative artifact path (as returned by render). */
  async artifactBytes(path: string): Promise<ArrayBuffer> {
    const response = await this.request("GET", path);
    return response.arrayBuffer();
  }

  async artifactText(path: string): Promise<string> {
    const response = await this.request("GET", path);
    return response.text();
  }

  streamUrl(sid: string): string {
    return this.baseUrl.replace(/^http/, "ws") + `/sessions/${sid}/stream`;
  }
}

/** The slice of a WebSocket the stream needs; browser sockets and the
 * `ws` package both fit it after a cast at the factory. */
export interface StreamSocket {
  binaryType: string;
  onopen: ((event?: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event?: unknown) => void) | null;
  onerror: ((event?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => StreamSocket;

export type StreamStatus = "connecting" | "open" | "retrying" | "closed";

export interface StreamHandlers {
  /** A revision announcement paired with its geometry frame. */
  onRevision(message: StreamMessage & { type: "revision" }, mesh: MeshBuffers): void;
  onServerError?(message: StreamMessage & { type: "error" }): void;
  onStatus?(status: StreamStatus, attempt: number): void;
  onProtocolError?(error: Error): void;
}

export interface StreamOptions {
  /** first reconnect delay; doubles per attempt up to maxDelayMs */
  baseDelayMs?: number;
  maxDelayMs?: number;
  schedule?: (callback: () => void, delayMs: number) => unknown;
  clearScheduled?: (handle: unknown) => void;
}

/** Live connection to a session's stream.
 *
 * The server answers each dispatched deform with a JSON revision header
 * followed by one binary geometry frame; this class re-pairs them and
 * reconnects with exponential backoff when the socket drops. Reconnection
 * is announced through `onStatus`, so the owner can refresh state that may
 * have moved while the socket was down. */
export class StreamConnection {
  private socket: StreamSocket | null = null;
  private pendingHeader: (StreamMessage & { type: "revision" }) | null = null;
  private attempt = 0;
  private closedByUser = false;
  private reconnectHandle: unknown = null;
  private readonly schedule: (cb: () => void, ms: number) => unknown;
  private readonly clearScheduled: (handle: unknown) => void;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly handlers: StreamHandlers,
    options: StreamOptions = {},
  ) {
    this.baseDelayMs = options.baseDelayMs ?? 250;
    this.maxDelayMs = options.maxDelayMs ?? 4000;
    this.schedule = options.schedule ?? ((cb, ms) => setTimeout(cb, ms));
    this.clearScheduled =
      options.clearScheduled ??
      ((h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]));
    this.open();
  }

  get isOpen(): boolean {
    return this.socket !== null;
  }

  /** Send one JSON message; false when the socket is down (caller may
   * fall back to HTTP or simply drop a mid-drag update). */
  send(message: object): boolean {
    if (this.socket === null) return false;
    this.socket.send(JSON.stringify(message));
    return true;
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectHandle !== null) {
      this.clearScheduled(this.reconnectHandle);
      this.reconnectHandle = null;
    }
    const socket = this.socket;
    this.socket = null;
    socket?.close();
    this.handlers.onStatus?.("closed", this.attempt);
  }

  private open(): void {
    this.handlers.onStatus?.("connecting", this.attempt);
    const socket = this.factory(this.url);
    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      this.socket = socket;
      this.attempt = 0;
      this.pendingHeader = null;
      this.handlers.onStatus?.("open", 0);
    };
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onerror = () => {
      // the close handler owns recovery; nothing to do here
    };
    socket.onclose = () => {
      const wasOpen = this.socket !== null;
      this.socket = null;
      if (this.closedByUser) return;
      if (!wasOpen && this.attempt === 0) this.attempt = 1;
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    const delay = Math.min(
      this.baseDelayMs * 2 ** Math.max(0, this.attempt - 1),
      this.maxDelayMs,
    );
    this.attempt += 1;
    this.handlers.onStatus?.("retrying", this.attempt);
    this.reconnectHandle = this.schedule(() => {
      this.reconnectHandle = null;
      if (!this.closedByUser) this.open();
    }, delay);
  }

  private handleMessage(data: unknown): void {
    try {
      if (typeof data === "string") {
        const message = parseStreamMessage(data);
        if (message.type === "error") {
          this.pendingHeader = null;
          this.handlers.onServerError?.(message);
          return;
        }
        this.pendingHeader = message;
        return;
      }
      if (data instanceof ArrayBuffer) {
        const header = this.pendingHeader;
        this.pendingHeader = null;
        if (header === null) {
          throw new Error("geometry frame arrived without a revision header");
        }
        this.handlers.onRevision(header, decodeMeshFrame(data));
        return;
      }
      throw new Error(`unsupported stream frame: ${Object.prototype.toString.call(data)}`);
    } catch (error) {
      this.handlers.onProtocolError?.(
        error instanceof Error ? error : new Error(String(error)),
      );
    }
  }
}
