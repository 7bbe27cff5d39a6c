/** Typed client for the editing service. All numerics happen server-side;
 * the client only moves JSON. */

export interface SemanticDirectionInfo {
  id: string;
  part: number;
  semantic: string;
  accuracy: number;
  dist_std: number;
}

export interface ObjectSummary {
  id: string;
  n: number;
  thumbnail: number[];
}

export interface ObjectDetail {
  id: string;
  n: number;
  points: number[];
  labels: number[];
}

export interface EditTermPayload {
  direction_id: string;
  alpha: number;
  units: "dist_std" | "absolute";
}

export interface EditDiagnostics {
  latent_norm_before: number;
  latent_norm_after: number;
  signed_distances: Record<string, [number, number]>;
  periphery_warning: boolean;
}

export interface EditResponse {
  object_id: string | null;
  n: number;
  original_points: number[];
  original_labels: number[];
  edited_points: number[];
  edited_labels: number[];
  applied_terms: { direction_id: string; alpha_absolute: number }[];
  diagnostics: EditDiagnostics;
  sls: Record<string, number | string>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const reply = await fetch(base + path, init);
  if (!reply.ok) {
    let detail = reply.statusText;
    try {
      const body = await reply.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      /* body was not json */
    }
    throw new ApiError(reply.status, detail);
  }
  return (await reply.json()) as T;
}

export class Client {
  constructor(readonly base: string = "") {}

  health(): Promise<{ version: string; checkpoint_hash: string }> {
    return request(this.base, "/api/health");
  }

  semantics(): Promise<{ directions: SemanticDirectionInfo[] }> {
    return request(this.base, "/api/semantics");
  }

  objects(n: number): Promise<{ objects: ObjectSummary[] }> {
    return request(this.base, `/api/objects?n=${n}`);
  }

  object(id: string): Promise<ObjectDetail> {
    return request(this.base, `/api/object/${id}`);
  }

  edit(objectId: string, terms: EditTermPayload[]): Promise<EditResponse> {
    return request(this.base, "/api/edit", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ object_id: objectId, terms }),
    });
  }
}
