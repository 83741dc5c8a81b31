/**
 * Typed client for the compliance API.
 *
 * Payload shapes mirror the server's JSON exactly; cell values are kept
 * as the strings the server sent and are never recomputed client-side.
 */

export type ColumnKind = "text" | "number";

export interface Column {
  name: string;
  type: ColumnKind;
}

export interface TableRow {
  cells: string[];
  /** Color-bin index per cell; null where the cell is not tinted. */
  bins: (number | null)[];
}

export interface TablePayload {
  kind: string;
  generated_at: string;
  columns: Column[];
  rows: TableRow[];
  row_count: number;
}

export interface TimelineEntry {
  participant_id: string;
  team_id: string;
  start_date: string;
  end_date: string;
  days_completed: number;
  pct_progress: string;
}

export interface TimelineGroup {
  funding_group: string;
  participants: TimelineEntry[];
}

export interface TimelinePayload {
  generated_at: string;
  groups: TimelineGroup[];
}

export interface OverviewMember {
  participant_id: string;
  status: string;
}

export interface OverviewTeam {
  team_id: string;
  participants: OverviewMember[];
}

export interface OverviewGroup {
  funding_group: string;
  teams: OverviewTeam[];
}

export interface OverviewPayload {
  generated_at: string;
  groups: OverviewGroup[];
}

export interface HealthPayload {
  status: string;
  generated_at: string | null;
}

export interface TableQuery {
  group?: string;
  team?: string;
  q?: string;
  sort?: string;
  dir?: "asc" | "desc";
}

export const TOKEN_STORAGE_KEY = "compliance_api_token";

/** Read the bearer token saved for this browser session, if any. */
export function storedToken(): string | null {
  try {
    return window.sessionStorage.getItem(TOKEN_STORAGE_KEY);
  } catch {
    return null;
  }
}

export function storeToken(token: string): void {
  try {
    window.sessionStorage.setItem(TOKEN_STORAGE_KEY, token);
  } catch {
    // storage unavailable; the token lives only in memory then
  }
}

export function clearToken(): void {
  try {
    window.sessionStorage.removeItem(TOKEN_STORAGE_KEY);
  } catch {
    // nothing to clear
  }
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body
  }
  return `request failed with status ${response.status}`;
}

export class ApiClient {
  constructor(
    private readonly token: string,
    private readonly baseUrl: string = "",
  ) {}

  private async request<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { Authorization: `Bearer ${this.token}` },
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  fetchHealth(): Promise<HealthPayload> {
    return this.request<HealthPayload>("/api/health");
  }

  fetchTable(kind: string, query: TableQuery = {}): Promise<TablePayload> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query)) {
      if (value) params.set(key, value);
    }
    const suffix = params.size > 0 ? `?${params.toString()}` : "";
    return this.request<TablePayload>(`/api/tables/${kind}${suffix}`);
  }

  fetchTimeline(): Promise<TimelinePayload> {
    return this.request<TimelinePayload>("/api/timeline");
  }

  fetchOverview(): Promise<OverviewPayload> {
    return this.request<OverviewPayload>("/api/enrollment-overview");
  }
}

/** The table-fetching surface the views need; lets tests stub the network. */
export interface DataSource {
  fetchTable(kind: string, query?: TableQuery): Promise<TablePayload>;
  fetchTimeline(): Promise<TimelinePayload>;
  fetchOverview(): Promise<OverviewPayload>;
}

/**
 * Serializes overlapping async loads: only the most recently started
 * call resolves with its value, earlier in-flight calls resolve null.
 */
export class LatestWins<T> {
  private seq = 0;

  async run(task: () => Promise<T>): Promise<T | null> {
    const ticket = ++this.seq;
    const value = await task();
    return ticket === this.seq ? value : null;
  }
}
