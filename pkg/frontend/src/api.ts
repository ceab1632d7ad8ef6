/** Typed client for the inference service. All communication goes through
 * this module; the UI never touches files directly. */

export interface SchemaLabel {
  id: number;
  name: string;
  component: string | null;
}

export interface SchemaDoc {
  version: string;
  labels: SchemaLabel[];
  palette: Array<[number, number, number]>;
}

export interface GenerateResult {
  image: ArrayBuffer;
  timings: Record<string, number>;
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  private async checked(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(this.url(path), init);
    } catch (e) {
      throw new ServiceError(0, `service unreachable: ${String(e)}`);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ServiceError(resp.status, detail);
    }
    return resp;
  }

  async getSchema(): Promise<SchemaDoc> {
    const resp = await this.checked("/v1/schema");
    return (await resp.json()) as SchemaDoc;
  }

  async listSamples(): Promise<string[]> {
    const resp = await this.checked("/v1/samples");
    const doc = (await resp.json()) as { samples: string[] };
    return doc.samples;
  }

  sampleImageUrl(id: string): string {
    return this.url(`/v1/samples/${id}/image`);
  }

  async getSampleMask(id: string): Promise<ArrayBuffer> {
    const resp = await this.checked(`/v1/samples/${id}/mask`);
    return resp.arrayBuffer();
  }

  async uploadAsset(bytes: Uint8Array): Promise<string> {
    const resp = await this.checked("/v1/assets", {
      method: "POST",
      body: bytes as unknown as BodyInit,
      headers: { "Content-Type": "image/png" },
    });
    const doc = (await resp.json()) as { id: string };
    return doc.id;
  }

  async generate(requestJson: string, signal?: AbortSignal): Promise<GenerateResult> {
    const resp = await this.checked("/v1/generate", {
      method: "POST",
      body: requestJson,
      headers: { "Content-Type": "application/json" },
      signal,
    });
    const timingHeader = resp.headers.get("X-Stage-Timing-Ms");
    return {
      image: await resp.arrayBuffer(),
      timings: timingHeader ? JSON.parse(timingHeader) : {},
    };
  }

  async parse(imageBytes: Uint8Array): Promise<ArrayBuffer> {
    const resp = await this.checked("/v1/parse", {
      method: "POST",
      body: imageBytes as unknown as BodyInit,
      headers: { "Content-Type": "image/png" },
    });
    return resp.arrayBuffer();
  }
}
