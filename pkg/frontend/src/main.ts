import { ServiceClient } from "./api.js";
import { Editor, COMPONENT_KEYS, ComponentKey } from "./editorState.js";
import { GenerationController } from "./generation.js";
import { MaskLayer } from "./maskLayer.js";
import { decodeIndexedPng, Palette } from "./png.js";

const ZOOM = 8; // nearest-neighbor; labels are categorical, never blended

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot() {
  const client = new ServiceClient("");
  const schema = await client.getSchema();
  const palette: Palette = schema.palette.map(([r, g, b]) => [r, g, b]);
  const samples = await client.listSamples();

  const firstMask = samples.length
    ? decodeIndexedPng(new Uint8Array(await client.getSampleMask(samples[0])))
    : { width: 64, height: 64, data: new Uint8Array(64 * 64), palette };
  const editor = new Editor(
    firstMask.width,
    firstMask.height,
    new MaskLayer(firstMask.width, firstMask.height, firstMask.data.slice()),
  );
  const generation = new GenerationController(client, palette);

  const canvas = el<HTMLCanvasElement>("mask-canvas");
  canvas.width = editor.mask.width * ZOOM;
  canvas.height = editor.mask.height * ZOOM;
  const ctx = canvas.getContext("2d")!;

  const banner = el<HTMLDivElement>("banner");
  const preview = el<HTMLImageElement>("preview");
  const staleBadge = el<HTMLSpanElement>("stale");

  function redraw() {
    const { width, height, data } = editor.mask;
    const img = ctx.createImageData(width, height);
    for (let i = 0; i < data.length; i++) {
      const [r, g, b] = palette[data[i]] ?? [255, 0, 255];
      img.data[i * 4] = r;
      img.data[i * 4 + 1] = g;
      img.data[i * 4 + 2] = b;
      img.data[i * 4 + 3] = 255;
    }
    const off = new OffscreenCanvas(width, height);
    off.getContext("2d")!.putImageData(img, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
    staleBadge.style.display = editor.previewStale ? "inline" : "none";
    el<HTMLButtonElement>("undo").disabled = !editor.canUndo;
    el<HTMLButtonElement>("redo").disabled = !editor.canRedo;
  }

  // label palette buttons
  const paletteBox = el<HTMLDivElement>("label-palette");
  for (const label of schema.labels) {
    const btn = document.createElement("button");
    btn.textContent = label.name;
    const [r, g, b] = palette[label.id];
    btn.style.borderLeft = `12px solid rgb(${r}, ${g}, ${b})`;
    btn.onclick = () => {
      editor.brushLabel = label.id;
      document.querySelectorAll("#label-palette button").forEach((n) =>
        n.classList.toggle("active", n === btn));
    };
    paletteBox.appendChild(btn);
  }

  const radius = el<HTMLInputElement>("radius");
  radius.oninput = () => (editor.brushRadius = Number(radius.value));

  // painting: accumulate a polyline per pointer drag, apply on release so
  // each drag is one undoable action
  let strokePoints: { x: number; y: number }[] | null = null;
  canvas.onpointerdown = (ev) => {
    strokePoints = [{ x: ev.offsetX / ZOOM, y: ev.offsetY / ZOOM }];
  };
  canvas.onpointermove = (ev) => {
    if (strokePoints) strokePoints.push({ x: ev.offsetX / ZOOM, y: ev.offsetY / ZOOM });
  };
  const finishStroke = () => {
    if (!strokePoints) return;
    editor.apply({
      kind: "paint",
      stroke: { points: strokePoints, radius: editor.brushRadius, label: editor.brushLabel },
    });
    strokePoints = null;
    redraw();
  };
  canvas.onpointerup = finishStroke;
  canvas.onpointerleave = finishStroke;

  el<HTMLButtonElement>("undo").onclick = () => {
    editor.undo();
    redraw();
  };
  el<HTMLButtonElement>("redo").onclick = () => {
    editor.redo();
    redraw();
  };

  // per-component source pickers and the background picker
  const pickers = el<HTMLDivElement>("pickers");
  const rows: Array<[string, (id: string) => void]> = COMPONENT_KEYS.map(
    (key) => [key, (id: string) => editor.apply({ kind: "select_component", component: key as ComponentKey, sampleId: id })],
  );
  rows.push(["background", (id: string) => editor.apply({ kind: "select_background", sampleId: id })]);
  for (const [name, select] of rows) {
    const row = document.createElement("div");
    row.className = "picker-row";
    const title = document.createElement("span");
    title.textContent = name;
    row.appendChild(title);
    for (const id of samples) {
      const thumb = document.createElement("img");
      thumb.src = client.sampleImageUrl(id);
      thumb.title = `${name} <- ${id}`;
      thumb.onclick = () => {
        select(id);
        row.querySelectorAll("img").forEach((n) => n.classList.toggle("active", n === thumb));
        redraw();
      };
      row.appendChild(thumb);
    }
    pickers.appendChild(row);
  }

  el<HTMLButtonElement>("generate").onclick = async () => {
    banner.textContent = "";
    const outcome = await generation.request(editor);
    if (outcome.ok) {
      preview.src = URL.createObjectURL(new Blob([outcome.image], { type: "image/png" }));
      const total = Object.values(outcome.timings).reduce((a, b) => a + b, 0);
      banner.textContent = `generated in ${total.toFixed(0)} ms`;
    } else {
      banner.textContent = `generation failed (${outcome.status}): ${outcome.message}`;
    }
    redraw();
  };

  redraw();
}

boot().catch((e) => {
  const banner = document.getElementById("banner");
  if (banner) banner.textContent = `failed to start: ${e}`;
});
