import { Editor } from "./editorState.js";
import { ServiceClient, ServiceError } from "./api.js";
import { encodeIndexedPng, Palette } from "./png.js";

export type GenerationOutcome =
  | { ok: true; image: ArrayBuffer; timings: Record<string, number> }
  | { ok: false; status: number; message: string };

/**
 * One preview request: encode the edited mask exactly as displayed (no
 * resampling), upload it as a content-addressed asset, post the canonical
 * edit request, and hand back the preview bytes.
 *
 * At most one request is in flight; a newer call aborts the older one.
 * Failures never touch editor state — the mask and selections survive.
 */
export class GenerationController {
  private inflight: AbortController | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly palette: Palette,
  ) {}

  async request(editor: Editor): Promise<GenerationOutcome> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const png = encodeIndexedPng(
        editor.mask.width,
        editor.mask.height,
        editor.mask.data,
        this.palette,
      );
      const maskAssetId = await this.client.uploadAsset(png);
      const request = editor.buildEditRequest(maskAssetId);
      const result = await this.client.generate(request, controller.signal);
      editor.lastPreview = result.image;
      editor.previewStale = false;
      return { ok: true, image: result.image, timings: result.timings };
    } catch (e) {
      if (e instanceof ServiceError) {
        return { ok: false, status: e.status, message: e.message };
      }
      return { ok: false, status: 0, message: String(e) };
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
