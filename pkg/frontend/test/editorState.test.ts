import { describe, expect, it } from "vitest";

import { Editor, EditorAction, replayActions, UNDO_DEPTH } from "../src/editorState.js";
import { MaskLayer } from "../src/maskLayer.js";

function paintAction(x: number, y: number, label = 2, radius = 1.5): EditorAction {
  return { kind: "paint", stroke: { points: [{ x, y }], radius, label } };
}

describe("Editor undo/redo", () => {
  it("paint then undo restores the mask bit-exactly", () => {
    const editor = new Editor(16, 16);
    const before = editor.mask.clone();
    editor.apply(paintAction(5, 5));
    expect(editor.mask.equals(before)).toBe(false);
    editor.undo();
    expect(editor.mask.equals(before)).toBe(true);
  });

  it("redo reapplies the undone action exactly", () => {
    const editor = new Editor(16, 16);
    editor.apply(paintAction(5, 5));
    const after = editor.mask.clone();
    editor.undo();
    editor.redo();
    expect(editor.mask.equals(after)).toBe(true);
  });

  it("supports at least 20 levels of undo", () => {
    const editor = new Editor(16, 16);
    expect(UNDO_DEPTH).toBeGreaterThanOrEqual(20);
    const snapshots: MaskLayer[] = [];
    for (let i = 0; i < 20; i++) {
      snapshots.push(editor.mask.clone());
      editor.apply(paintAction(i % 16, Math.floor(i / 16) + 2, (i % 5) + 1));
    }
    for (let i = 19; i >= 0; i--) {
      editor.undo();
      expect(editor.mask.equals(snapshots[i])).toBe(true);
    }
  });

  it("undo also reverts selections", () => {
    const editor = new Editor(8, 8);
    editor.apply({ kind: "select_component", component: "hair", sampleId: "face_0001" });
    expect(editor.selections.hair).toBe("face_0001");
    editor.undo();
    expect(editor.selections.hair).toBeNull();
  });

  it("new action clears the redo stack", () => {
    const editor = new Editor(8, 8);
    editor.apply(paintAction(1, 1));
    editor.undo();
    editor.apply(paintAction(2, 2));
    expect(editor.canRedo).toBe(false);
  });
});

describe("action-log replay", () => {
  it("replaying the log reproduces mask and selections exactly", () => {
    const editor = new Editor(16, 16);
    editor.apply(paintAction(3, 3, 1, 2));
    editor.apply({ kind: "select_component", component: "hair", sampleId: "face_0002" });
    editor.apply(paintAction(10, 4, 5, 3));
    editor.apply({ kind: "select_background", sampleId: "face_0003" });
    editor.apply({ kind: "fill", label: 0 });
    editor.apply(paintAction(8, 8, 2, 4));

    const replayed = replayActions(16, 16, editor.actionLog());
    expect(replayed.mask.equals(editor.mask)).toBe(true);
    expect(replayed.selections).toEqual(editor.selections);
    expect(replayed.background).toBe(editor.background);
  });

  it("undone actions disappear from the log so replay matches", () => {
    const editor = new Editor(16, 16);
    editor.apply(paintAction(3, 3));
    editor.apply(paintAction(12, 12));
    editor.undo();
    const replayed = replayActions(16, 16, editor.actionLog());
    expect(replayed.mask.equals(editor.mask)).toBe(true);
    expect(editor.actionLog()).toHaveLength(1);
  });

  it("redo restores the action into the log", () => {
    const editor = new Editor(16, 16);
    editor.apply(paintAction(3, 3));
    editor.apply(paintAction(12, 12));
    editor.undo();
    editor.redo();
    const replayed = replayActions(16, 16, editor.actionLog());
    expect(replayed.mask.equals(editor.mask)).toBe(true);
    expect(editor.actionLog()).toHaveLength(2);
  });
});

describe("selections and staleness", () => {
  it("selection persists across mask edits", () => {
    const editor = new Editor(8, 8);
    editor.apply({ kind: "select_component", component: "mouth", sampleId: "face_0004" });
    editor.apply(paintAction(2, 2));
    editor.apply(paintAction(3, 3));
    expect(editor.selections.mouth).toBe("face_0004");
  });

  it("any action marks the preview stale", () => {
    const editor = new Editor(8, 8);
    editor.previewStale = false;
    editor.apply({ kind: "select_component", component: "hair", sampleId: "x" });
    expect(editor.previewStale).toBe(true);
    editor.previewStale = false;
    editor.apply(paintAction(1, 1));
    expect(editor.previewStale).toBe(true);
  });

  it("select then deselect returns to the original state", () => {
    const editor = new Editor(8, 8);
    editor.apply({ kind: "select_component", component: "hair", sampleId: "a" });
    editor.apply({ kind: "select_component", component: "hair", sampleId: null });
    expect(editor.selections.hair).toBeNull();
  });
});

describe("edit request document", () => {
  function fullySelected(): Editor {
    const editor = new Editor(8, 8);
    editor.apply({ kind: "select_component", component: "left_eye", sampleId: "s1" });
    editor.apply({ kind: "select_component", component: "right_eye", sampleId: "s1" });
    editor.apply({ kind: "select_component", component: "mouth", sampleId: "s2" });
    editor.apply({ kind: "select_component", component: "skin_nose", sampleId: "s2" });
    editor.apply({ kind: "select_component", component: "hair", sampleId: "s3" });
    editor.apply({ kind: "select_background", sampleId: "s4" });
    return editor;
  }

  it("matches the canonical wire format", () => {
    const editor = fullySelected();
    const doc = JSON.parse(editor.buildEditRequest("maskasset123"));
    expect(doc).toEqual({
      format_version: 1,
      target_mask: "maskasset123",
      components: {
        left_eye: "s1",
        right_eye: "s1",
        mouth: "s2",
        skin_nose: "s2",
        hair: "s3",
      },
      background: "s4",
    });
  });

  it("refuses to build with missing selections", () => {
    const editor = new Editor(8, 8);
    expect(() => editor.buildEditRequest("m")).toThrow(/missing selections/);
    expect(editor.missingSelections()).toContain("background");
  });
});
