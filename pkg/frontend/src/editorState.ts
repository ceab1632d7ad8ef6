import { MaskLayer } from "./maskLayer.js";
import { rasterizeStroke, Stroke } from "./brush.js";

/** Component keys in the fixed order the service's edit request uses. */
export const COMPONENT_KEYS = [
  "left_eye",
  "right_eye",
  "mouth",
  "skin_nose",
  "hair",
] as const;

export type ComponentKey = (typeof COMPONENT_KEYS)[number];

export type EditorAction =
  | { kind: "paint"; stroke: Stroke }
  | { kind: "fill"; label: number }
  | { kind: "set_mask"; data: Uint8Array }
  | { kind: "select_component"; component: ComponentKey; sampleId: string | null }
  | { kind: "select_background"; sampleId: string | null };

export const EDIT_REQUEST_FORMAT_VERSION = 1;

export const UNDO_DEPTH = 64; // invariant requires >= 20

interface Snapshot {
  mask: MaskLayer;
  selections: Record<ComponentKey, string | null>;
  background: string | null;
}

/**
 * The whole editing session: the mask layer being painted, the active
 * brush, per-component appearance sources, the background source, undo/redo
 * stacks, and the staleness of the last generated preview.
 *
 * Every action funnels through apply(), which records the action log (for
 * replay) and a pre-action snapshot (for undo).
 */
export class Editor {
  mask: MaskLayer;
  brushLabel = 1;
  brushRadius = 2;
  selections: Record<ComponentKey, string | null>;
  background: string | null = null;
  previewStale = true;
  lastPreview: ArrayBuffer | null = null;

  private log: EditorAction[] = [];
  private undoStack: Snapshot[] = [];
  private redoStack: { snap: Snapshot; action: EditorAction }[] = [];

  constructor(width: number, height: number, mask?: MaskLayer) {
    this.mask = mask ?? new MaskLayer(width, height);
    this.selections = {
      left_eye: null,
      right_eye: null,
      mouth: null,
      skin_nose: null,
      hair: null,
    };
  }

  private snapshot(): Snapshot {
    return {
      mask: this.mask.clone(),
      selections: { ...this.selections },
      background: this.background,
    };
  }

  private restore(s: Snapshot): void {
    this.mask = s.mask.clone();
    this.selections = { ...s.selections };
    this.background = s.background;
    this.previewStale = true;
  }

  apply(action: EditorAction): void {
    this.undoStack.push(this.snapshot());
    if (this.undoStack.length > UNDO_DEPTH) this.undoStack.shift();
    this.redoStack = [];
    this.log.push(action);
    this.execute(action);
    this.previewStale = true;
  }

  private execute(action: EditorAction): void {
    switch (action.kind) {
      case "paint":
        rasterizeStroke(this.mask, action.stroke);
        break;
      case "fill":
        this.mask.fill(action.label);
        break;
      case "set_mask":
        this.mask = new MaskLayer(this.mask.width, this.mask.height, action.data.slice());
        break;
      case "select_component":
        this.selections[action.component] = action.sampleId;
        break;
      case "select_background":
        this.background = action.sampleId;
        break;
    }
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): void {
    const s = this.undoStack.pop();
    if (!s) return;
    // the log always describes the path from the initial state to the
    // current one, so undoing removes the last action from it
    const action = this.log.pop()!;
    this.redoStack.push({ snap: this.snapshot(), action });
    this.restore(s);
  }

  redo(): void {
    const r = this.redoStack.pop();
    if (!r) return;
    this.undoStack.push(this.snapshot());
    this.log.push(r.action);
    this.restore(r.snap);
  }

  actionLog(): EditorAction[] {
    return [...this.log];
  }

  /** All five components and the background must be selected to generate. */
  missingSelections(): string[] {
    const missing: string[] = COMPONENT_KEYS.filter((k) => this.selections[k] === null);
    if (this.background === null) missing.push("background");
    return missing;
  }

  /**
   * The canonical declarative edit request the service consumes. The target
   * mask travels separately (uploaded as an asset) and is referenced by id.
   */
  buildEditRequest(targetMaskRef: string): string {
    const missing = this.missingSelections();
    if (missing.length > 0) {
      throw new Error(`cannot generate: missing selections for ${missing.join(", ")}`);
    }
    const components: Record<string, string> = {};
    for (const k of COMPONENT_KEYS) components[k] = this.selections[k]!;
    return JSON.stringify(
      {
        format_version: EDIT_REQUEST_FORMAT_VERSION,
        target_mask: targetMaskRef,
        components,
        background: this.background,
      },
      null,
      2,
    );
  }
}

/** Rebuild an editor by replaying an action log from a blank state. */
export function replayActions(
  width: number,
  height: number,
  actions: EditorAction[],
  initialMask?: MaskLayer,
): Editor {
  const editor = new Editor(width, height, initialMask?.clone());
  for (const a of actions) editor.apply(a);
  return editor;
}
