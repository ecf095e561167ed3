import type { PairPayload, VoteResponse, ViewMode } from "./types";

export type VoteStatus = "loading" | "pending" | "submitted" | "revealed" | "error";

/**
 * Client state for one comparison. Model identities exist here only after
 * the vote response arrives; until then the state holds nothing but opaque
 * content references.
 */
export class ComparisonState {
  status: VoteStatus = "loading";
  pair: PairPayload | null = null;
  reveal: VoteResponse["reveal"] | null = null;
  viewMode: ViewMode;
  notice: string | null = null;

  constructor(readonly topologyArena: boolean) {
    // topology evaluation never shows rendered surfaces
    this.viewMode = topologyArena ? "wireframe" : "rendered";
  }

  beginLoading(): void {
    this.status = "loading";
    this.pair = null;
    this.reveal = null;
  }

  pairReady(pair: PairPayload): void {
    this.pair = pair;
    this.status = "pending";
  }

  submitting(): void {
    if (this.status !== "pending") throw new Error(`cannot submit from ${this.status}`);
    this.status = "submitted";
  }

  revealed(reveal: VoteResponse["reveal"]): void {
    this.reveal = reveal;
    this.status = "revealed";
  }

  backToPending(): void {
    this.status = "pending";
  }

  failed(notice: string): void {
    this.status = "error";
    this.notice = notice;
  }

  toggleViewMode(): ViewMode {
    if (!this.topologyArena) {
      this.viewMode = this.viewMode === "rendered" ? "wireframe" : "rendered";
    }
    return this.viewMode;
  }
}
