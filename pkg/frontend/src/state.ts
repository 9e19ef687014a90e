/** Viewport state: which instance and tool are active, which revision is
 * on screen, and the gate that keeps displayed geometry monotonic. The
 * client never mutates geometry locally — every frame on screen came back
 * from the service, and frames may only move the display forward. */

import type { OrbitState } from "./math.js";
import { defaultOrbit } from "./math.js";
import type { RigKind } from "./protocol.js";

export type Tool = "select" | "handle-drag" | "bone-rotate" | "cage-edit";

/** Which rig type each editing tool drives; `select` needs none. */
export const TOOL_RIG: Readonly<Record<Tool, RigKind | null>> = {
  select: null,
  "handle-drag": "handles",
  "bone-rotate": "skeleton",
  "cage-edit": "cage",
};

export interface ToolChange {
  readonly ok: boolean;
  readonly reason?: string;
}

/** Admits geometry frames in display order.
 *
 * `acknowledge` records the newest revision the server has announced;
 * `offerFrame` answers whether a frame for some revision may be shown.
 * Stale or duplicate frames are refused, and a frame is never shown ahead
 * of its acknowledgement, so displayed ≤ acknowledged always holds. */
export class RevisionGate {
  private acked = 0;
  private shown = 0;

  acknowledge(revision: number): void {
    if (revision > this.acked) this.acked = revision;
  }

  offerFrame(revision: number): boolean {
    if (revision <= this.shown || revision > this.acked) return false;
    this.shown = revision;
    return true;
  }

  get acknowledged(): number {
    return this.acked;
  }

  get displayed(): number {
    return this.shown;
  }
}

export class ViewportState {
  orbit: OrbitState = defaultOrbit();
  selectedInstance: string | null = null;
  readonly revisions = new RevisionGate();
  private activeTool: Tool = "select";

  get tool(): Tool {
    return this.activeTool;
  }

  /** Switch tools; editing tools engage only when the matching rig is bound. */
  requestTool(tool: Tool, boundRig: RigKind | null): ToolChange {
    const needs = TOOL_RIG[tool];
    if (needs !== null && needs !== boundRig) {
      return {
        ok: false,
        reason:
          boundRig === null
            ? `${tool} needs a ${needs} rig; none is bound`
            : `${tool} needs a ${needs} rig; the bound rig is ${boundRig}`,
      };
    }
    this.activeTool = tool;
    return { ok: true };
  }
}
