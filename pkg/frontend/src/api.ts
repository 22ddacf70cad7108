/**
 * Typed client for the engine's JSON API.
 *
 * Every mutation carries a fresh X-Request-Token so a network-level retry
 * with the same token is applied at most once, and an X-Expected-Revision
 * header whenever the client has seen the project before. A 409
 * stale-revision answer surfaces as StaleRevisionError; callers go through
 * withConflictRetry to reload and replay once, which is the whole
 * concurrency story for a single-user tool.
 */
import type {
  Depths,
  DocumentMeta,
  Link,
  LinkLevel,
  ProjectEnvelope,
  ProjectSummary,
  PromptTemplate,
  Role,
  SuggestionPayload,
  SuggestResponse,
  TechniqueDef,
  Violation,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class StaleRevisionError extends ApiError {
  constructor(
    status: number,
    message: string,
    readonly expected: number,
    readonly current: number,
  ) {
    super(status, "stale-revision", message, { expected, current });
    this.name = "StaleRevisionError";
  }
}

let tokenCounter = 0;

export function newRequestToken(): string {
  tokenCounter += 1;
  const rand =
    typeof crypto !== "undefined" && "randomUUID" in crypto
      ? crypto.randomUUID()
      : Math.random().toString(36).slice(2);
  return `ui-${tokenCounter}-${rand}`;
}

interface MutateOptions {
  // Reuse a token when retrying the same logical request after a network
  // failure; the server then replays instead of applying twice.
  token?: string;
  // Skip the revision guard (project creation has no revision yet).
  guard?: boolean;
}

export class ApiClient {
  private revisions = new Map<string, number>();

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  /** Revision last seen for a project ref, if any. */
  revisionOf(ref: string): number | null {
    return this.revisions.get(ref) ?? null;
  }

  private note(ref: string | null, revision: unknown): void {
    if (ref !== null && typeof revision === "number") {
      this.revisions.set(ref, revision);
    }
  }

  private async parseError(response: Response): Promise<ApiError> {
    let body: Record<string, unknown> = {};
    try {
      body = (await response.json()) as Record<string, unknown>;
    } catch {
      // non-JSON error page; fall through to the generic shape
    }
    const code = typeof body.code === "string" ? body.code : "http-error";
    const message =
      typeof body.message === "string" ? body.message : response.statusText;
    const details = body.details ?? null;
    if (code === "stale-revision" && details && typeof details === "object") {
      const d = details as { expected?: number; current?: number };
      return new StaleRevisionError(
        response.status,
        message,
        d.expected ?? -1,
        d.current ?? -1,
      );
    }
    return new ApiError(response.status, code, message, details);
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw await this.parseError(response);
    }
    return (await response.json()) as T;
  }

  private async mutate<T>(
    method: "POST" | "PUT" | "PATCH" | "DELETE",
    path: string,
    ref: string | null,
    body: unknown,
    options: MutateOptions = {},
  ): Promise<T> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
      "X-Request-Token": options.token ?? newRequestToken(),
    };
    const guard = options.guard ?? true;
    const known = ref !== null ? this.revisions.get(ref) : undefined;
    if (guard && known !== undefined) {
      headers["X-Expected-Revision"] = String(known);
    }
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: JSON.stringify(body ?? {}),
    });
    if (!response.ok) {
      throw await this.parseError(response);
    }
    const parsed = (await response.json()) as T & { revision?: number };
    this.note(ref, parsed.revision);
    return parsed;
  }

  /**
   * Run a mutation; on a stale-revision conflict, reload the project to
   * pick up the current revision and replay the mutation once.
   */
  async withConflictRetry<T>(ref: string, fn: () => Promise<T>): Promise<T> {
    try {
      return await fn();
    } catch (error) {
      if (!(error instanceof StaleRevisionError)) {
        throw error;
      }
      await this.getProject(ref);
      return await fn();
    }
  }

  // --- reads ---------------------------------------------------------------

  async health(): Promise<{ status: string; version: string }> {
    return this.get("/health");
  }

  async listProjects(): Promise<ProjectSummary[]> {
    const data = await this.get<{ projects: ProjectSummary[] }>("/projects");
    return data.projects;
  }

  async getProject(ref: string): Promise<ProjectEnvelope> {
    const data = await this.get<ProjectEnvelope>(
      `/projects/${encodeURIComponent(ref)}`,
    );
    this.note(ref, data.revision);
    this.note(data.project.project_id, data.revision);
    return data;
  }

  async validateProject(
    ref: string,
  ): Promise<{ ok: boolean; violations: Violation[] }> {
    return this.get(`/projects/${encodeURIComponent(ref)}/validate`);
  }

  async getTechniques(ref: string): Promise<TechniqueDef[]> {
    const data = await this.get<{ taxonomy: TechniqueDef[] }>(
      `/projects/${encodeURIComponent(ref)}/techniques`,
    );
    return data.taxonomy;
  }

  async getTemplates(ref: string): Promise<PromptTemplate[]> {
    const data = await this.get<{ templates: PromptTemplate[] }>(
      `/projects/${encodeURIComponent(ref)}/templates`,
    );
    return data.templates;
  }

  // --- mutations -----------------------------------------------------------

  async createProject(
    name: string,
    srcLang: string,
    tgtLang: string,
    options: MutateOptions = {},
  ): Promise<{ project_id: string; name: string; revision: number }> {
    return this.mutate(
      "POST",
      "/projects",
      null,
      { name, src_lang: srcLang, tgt_lang: tgtLang },
      { ...options, guard: false },
    );
  }

  async putDocument(
    ref: string,
    role: Role,
    text: string,
    extra: { meta?: Partial<DocumentMeta>; replace?: boolean } = {},
    options: MutateOptions = {},
  ): Promise<{ revision: number; paragraph_count: number }> {
    return this.mutate(
      "PUT",
      `/projects/${encodeURIComponent(ref)}/documents/${role}`,
      ref,
      { text, meta: extra.meta, replace_existing: extra.replace ?? false },
      options,
    );
  }

  async putMetadata(
    ref: string,
    role: Role,
    meta: Partial<DocumentMeta>,
    options: MutateOptions = {},
  ): Promise<{ revision: number; meta: DocumentMeta }> {
    return this.mutate(
      "PUT",
      `/projects/${encodeURIComponent(ref)}/metadata/${role}`,
      ref,
      { meta },
      options,
    );
  }

  async addLink(
    ref: string,
    link: { level: LinkLevel; source_ids: string[]; target_ids: string[] },
    options: MutateOptions = {},
  ): Promise<{ revision: number; link?: Link }> {
    return this.mutate(
      "POST",
      `/projects/${encodeURIComponent(ref)}/links`,
      ref,
      link,
      options,
    );
  }

  async patchLink(
    ref: string,
    linkId: string,
    fields: Partial<
      Pick<Link, "source_ids" | "target_ids" | "comment" | "techniques">
    >,
    options: MutateOptions = {},
  ): Promise<{ revision: number; link: Link }> {
    return this.mutate(
      "PATCH",
      `/projects/${encodeURIComponent(ref)}/links/${encodeURIComponent(linkId)}`,
      ref,
      fields,
      options,
    );
  }

  async deleteLink(
    ref: string,
    linkId: string,
    options: MutateOptions = {},
  ): Promise<{ revision: number }> {
    return this.mutate(
      "DELETE",
      `/projects/${encodeURIComponent(ref)}/links/${encodeURIComponent(linkId)}`,
      ref,
      {},
      options,
    );
  }

  async undo(ref: string, options: MutateOptions = {}): Promise<Depths> {
    return this.mutate(
      "POST",
      `/projects/${encodeURIComponent(ref)}/undo`,
      ref,
      {},
      options,
    );
  }

  async redo(ref: string, options: MutateOptions = {}): Promise<Depths> {
    return this.mutate(
      "POST",
      `/projects/${encodeURIComponent(ref)}/redo`,
      ref,
      {},
      options,
    );
  }

  async putTechniques(
    ref: string,
    taxonomy: TechniqueDef[],
    options: MutateOptions = {},
  ): Promise<{ revision: number; taxonomy: TechniqueDef[] }> {
    return this.mutate(
      "PUT",
      `/projects/${encodeURIComponent(ref)}/techniques`,
      ref,
      { taxonomy },
      options,
    );
  }

  async putTemplates(
    ref: string,
    templates: PromptTemplate[],
    options: MutateOptions = {},
  ): Promise<{ revision: number; templates: PromptTemplate[] }> {
    return this.mutate(
      "PUT",
      `/projects/${encodeURIComponent(ref)}/templates`,
      ref,
      { templates },
      options,
    );
  }

  // --- suggestion review ----------------------------------------------------

  /** Suggest mutates nothing, so it carries no token and no guard. */
  async suggest(
    ref: string,
    srcPara: string,
    tgtPara: string,
    templateId?: string,
  ): Promise<SuggestResponse> {
    const path =
      `/projects/${encodeURIComponent(ref)}/paragraph-pairs/` +
      `${encodeURIComponent(srcPara)}/${encodeURIComponent(tgtPara)}/suggest`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(templateId ? { template_id: templateId } : {}),
    });
    if (!response.ok) {
      throw await this.parseError(response);
    }
    return (await response.json()) as SuggestResponse;
  }

  async accept(
    ref: string,
    srcPara: string,
    tgtPara: string,
    payload: SuggestionPayload,
    origin: string = "llm",
    options: MutateOptions = {},
  ): Promise<{ revision: number; links: Link[] }> {
    const path =
      `/projects/${encodeURIComponent(ref)}/paragraph-pairs/` +
      `${encodeURIComponent(srcPara)}/${encodeURIComponent(tgtPara)}/accept`;
    return this.mutate("POST", path, ref, { payload, origin }, options);
  }

  // --- export ----------------------------------------------------------------

  /** The zipped bundle as raw bytes (export mutates nothing). */
  async exportBundle(ref: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(
      this.baseUrl + `/projects/${encodeURIComponent(ref)}/export`,
      { method: "POST" },
    );
    if (!response.ok) {
      throw await this.parseError(response);
    }
    return response.arrayBuffer();
  }
}
