/** Typed client for the exploration service JSON API. */

export type Cell = string | number | null;

export interface DatasetInfo {
  id: string;
  relations: string[];
  suggested_program: string | null;
}

export interface ResultPayload {
  relation: string;
  columns: string[];
  rows: Cell[][];
}

export interface OccurrenceInfo {
  path: string;
  alias: string;
  relation: string;
  rule: string;
  depth: number;
  is_view: boolean;
  key_covered: boolean | null;
}

export interface PlanPayload {
  chosen: string[];
  rk_columns: string[];
  added_columns: string[];
  rk_rule: string;
  vk_rules: string[];
  oq_rule: string;
  cases?: Record<string, number>;
  stats?: {
    rows_r: number;
    rows_rk: number;
    joins_without: number;
    joins_with: number;
    benefit: number;
    cost: number;
    score: string;
  };
}

export interface SessionPayload {
  session: string;
  strategy: string;
  result: ResultPayload;
  occurrences: OccurrenceInfo[];
  plan: PlanPayload | null;
  selection?: Cell[][];
  elapsed_us: number;
}

export interface ProvStatsPayload {
  strategy: string;
  join_count: number;
  chain_join_count: number;
  query_count: number;
  rows: number;
  case: number | null;
  elapsed_us: number;
}

export interface ProvenancePayload {
  occurrence: string;
  relation: string;
  is_view: boolean;
  columns: string[];
  rows: Cell[][];
  strategy: string;
  stats: ProvStatsPayload;
  elapsed_us: number;
}

export interface Api {
  listDatasets(): Promise<{ datasets: DatasetInfo[] }>;
  createSession(
    dataset: string,
    program: string,
    strategy: string,
    planMode?: string | string[],
  ): Promise<SessionPayload>;
  describeSession(id: string): Promise<SessionPayload>;
  setSelection(id: string, rows: Cell[][]): Promise<{ selected: number }>;
  getProvenance(id: string, occurrence: string): Promise<ProvenancePayload>;
  getPlan(id: string): Promise<{ plan: PlanPayload | null }>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
  }
}

/** Minimal fetch wrapper; the base path defaults to the service root when the
 * UI is served from `/ui`. */
export class ApiClient implements Api {
  constructor(
    private base: string = "..",
    private fetcher: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetcher(`${this.base}${path}`, {
        headers: { "content-type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new ApiError(0, "unreachable", `service unreachable: ${err}`);
    }
    const body = await resp.json().catch(() => null);
    if (!resp.ok) {
      const code = body?.code ?? "error";
      const message = body?.message ?? resp.statusText;
      throw new ApiError(resp.status, code, message, body?.detail ?? null);
    }
    return body as T;
  }

  listDatasets(): Promise<{ datasets: DatasetInfo[] }> {
    return this.request("/datasets");
  }

  createSession(
    dataset: string,
    program: string,
    strategy: string,
    planMode: string | string[] = "auto",
  ): Promise<SessionPayload> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ dataset, program, strategy, plan_mode: planMode }),
    });
  }

  describeSession(id: string): Promise<SessionPayload> {
    return this.request(`/sessions/${id}`);
  }

  setSelection(id: string, rows: Cell[][]): Promise<{ selected: number }> {
    return this.request(`/sessions/${id}/selection`, {
      method: "POST",
      body: JSON.stringify({ rows }),
    });
  }

  getProvenance(id: string, occurrence: string): Promise<ProvenancePayload> {
    return this.request(`/sessions/${id}/provenance/${encodeURIComponent(occurrence)}`);
  }

  getPlan(id: string): Promise<{ plan: PlanPayload | null }> {
    return this.request(`/sessions/${id}/plan`);
  }
}
