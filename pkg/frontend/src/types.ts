/** Wire types for the arena HTTP API. */

export type AssetFormat = "mesh" | "splat";
export type ArenaMode = "standard" | "topology";
export type ViewMode = "rendered" | "wireframe";
export type Side = "left" | "right";

export interface PairAsset {
  file_ref: string;
  format: AssetFormat;
  polygon_count: number;
}

export interface PairPayload {
  comparison_id: string;
  mode: ArenaMode;
  prompt: { prompt_id: string; image_ref: string };
  left: PairAsset;
  right: PairAsset;
  expires_at: string;
}

export interface RevealEntry {
  model_id: string;
  display_name: string;
  elo: number;
  votes: number;
}

export interface VoteResponse {
  accepted: boolean;
  vote_id: string;
  mode: ArenaMode;
  reveal: { left: RevealEntry; right: RevealEntry };
}

export interface LeaderboardRow {
  rank: number;
  display_name: string;
  elo: number;
  votes: number;
  win_rate: number | null;
  win_rate_label: string;
  format: string;
}

export interface LeaderboardPayload {
  mode: ArenaMode;
  total_votes: number;
  snapshot_at: string | null;
  rows: LeaderboardRow[];
}
