import type { ArenaMode, LeaderboardPayload, PairPayload, Side, VoteResponse } from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Thin typed client over the arena service endpoints. */
export class ArenaApi {
  constructor(
    private readonly baseUrl: string = "",
    private token: string | null = null,
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private headers(json = false): HeadersInit {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (json) headers["Content-Type"] = "application/json";
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  fetchPair(mode: ArenaMode): Promise<PairPayload> {
    return this.request<PairPayload>(`/api/pair?mode=${mode}`, { headers: this.headers() });
  }

  submitVote(comparisonId: string, winner: Side): Promise<VoteResponse> {
    return this.request<VoteResponse>("/api/vote", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ comparison_id: comparisonId, winner }),
    });
  }

  fetchLeaderboard(mode: ArenaMode): Promise<LeaderboardPayload> {
    return this.request<LeaderboardPayload>(`/api/leaderboard?mode=${mode}`);
  }

  assetUrl(fileRef: string): string {
    return `${this.baseUrl}/api/assets/${fileRef}`;
  }
}
