import type { Decision, ReviewItem, Stats } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin fetch wrapper for the review service; fetch is injectable so tests
 *  can observe every request. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(`HTTP ${response.status} for ${path}`, response.status);
    }
    return (await response.json()) as T;
  }

  async nextItem(reviewer: string): Promise<ReviewItem | null> {
    const body = await this.request<{ item: ReviewItem | null }>(
      `/api/queue/next?reviewer=${encodeURIComponent(reviewer)}`,
    );
    return body.item;
  }

  async submitDecision(decision: Decision): Promise<void> {
    await this.request("/api/decisions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  async stats(): Promise<Stats> {
    return this.request<Stats>("/api/stats");
  }
}
