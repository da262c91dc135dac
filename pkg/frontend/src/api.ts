import type {
  Aspect,
  CandidatePairView,
  FeedItemView,
  JudgmentBody,
  RankResponse,
  StatsView,
  TrainSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type SubmitStatus = "stored" | "duplicate";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

async function detailOf(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return res.statusText || `HTTP ${res.status}`;
  }
}

/** Typed client for the judgment service. All calls go over HTTP; the
 * page holds no data of its own beyond what these endpoints return. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) =>
      fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return (await res.json()) as T;
  }

  feedItems(): Promise<FeedItemView[]> {
    return this.get("/feed-items");
  }

  pairs(aspect: Aspect, n: number, judge: string): Promise<CandidatePairView[]> {
    const q = new URLSearchParams({
      aspect,
      n: String(n),
      judge,
    });
    return this.get(`/pairs?${q}`);
  }

  /** Submit one judgment. A duplicate (the server already holds this
   * judge's verdict on this pair and aspect) reports "duplicate"
   * instead of throwing: exactly one record exists either way. */
  async submitJudgment(body: JudgmentBody): Promise<SubmitStatus> {
    const res = await this.fetchFn(`${this.baseUrl}/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (res.status === 409) return "duplicate";
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return "stored";
  }

  async train(aspect: Aspect): Promise<TrainSummary> {
    const res = await this.fetchFn(
      `${this.baseUrl}/train?aspect=${encodeURIComponent(aspect)}`,
      { method: "POST" },
    );
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return (await res.json()) as TrainSummary;
  }

  rank(
    user: string,
    item: string,
    aspect: Aspect,
    k: number,
  ): Promise<RankResponse> {
    const q = new URLSearchParams({ user, item, aspect, k: String(k) });
    return this.get(`/rank?${q}`);
  }

  stats(): Promise<StatsView> {
    return this.get("/stats");
  }
}
