import { ArenaApi } from "./api";
import type { ArenaMode, LeaderboardPayload, LeaderboardRow } from "./types";

type SortKey = "rank" | "display_name" | "elo" | "votes" | "win_rate" | "format";

const COLUMNS: { key: SortKey; label: string }[] = [
  { key: "rank", label: "Rank" },
  { key: "display_name", label: "Model" },
  { key: "elo", label: "ELO" },
  { key: "votes", label: "Votes" },
  { key: "win_rate", label: "Win Rate" },
  { key: "format", label: "Format" },
];

/**
 * Public leaderboard table. Rows render in server order until a column
 * header is clicked; the mode switch refetches the matching rating track.
 * The client never computes ratings, it only displays server values.
 */
export class LeaderboardView {
  readonly root: HTMLElement;
  private readonly table: HTMLTableElement;
  private readonly summary: HTMLElement;
  private readonly modeSelect: HTMLSelectElement;
  private payload: LeaderboardPayload | null = null;
  private sort: { key: SortKey; descending: boolean } | null = null;

  constructor(private readonly api: ArenaApi) {
    this.root = document.createElement("div");
    this.root.className = "leaderboard";

    const header = document.createElement("div");
    header.className = "leaderboard-header";
    this.modeSelect = document.createElement("select");
    this.modeSelect.className = "mode-select";
    for (const mode of ["standard", "topology"]) {
      const option = document.createElement("option");
      option.value = mode;
      option.textContent = mode === "standard" ? "Standard arena" : "Topology arena";
      this.modeSelect.appendChild(option);
    }
    this.modeSelect.addEventListener("change", () => void this.refresh());
    header.appendChild(this.modeSelect);

    this.summary = document.createElement("span");
    this.summary.className = "summary";
    header.appendChild(this.summary);
    this.root.appendChild(header);

    this.table = document.createElement("table");
    this.root.appendChild(this.table);
  }

  get mode(): ArenaMode {
    return this.modeSelect.value as ArenaMode;
  }

  async refresh(): Promise<void> {
    this.payload = await this.api.fetchLeaderboard(this.mode);
    this.sort = null; // back to server order on every fetch
    this.render();
  }

  private sortedRows(): LeaderboardRow[] {
    if (!this.payload) return [];
    const rows = [...this.payload.rows];
    const sort = this.sort;
    if (!sort) return rows;
    rows.sort((a, b) => {
      const x = a[sort.key];
      const y = b[sort.key];
      let cmp: number;
      if (typeof x === "string" && typeof y === "string") cmp = x.localeCompare(y);
      else cmp = Number(x ?? -Infinity) - Number(y ?? -Infinity);
      return sort.descending ? -cmp : cmp;
    });
    return rows;
  }

  private toggleSort(key: SortKey): void {
    if (this.sort && this.sort.key === key) {
      this.sort = { key, descending: !this.sort.descending };
    } else {
      // metrics start descending, labels ascending
      this.sort = { key, descending: key === "elo" || key === "votes" || key === "win_rate" };
    }
    this.render();
  }

  private render(): void {
    if (!this.payload) return;
    this.summary.textContent = `${this.payload.total_votes.toLocaleString()} votes`;
    this.table.replaceChildren();

    const head = this.table.createTHead().insertRow();
    for (const column of COLUMNS) {
      const cell = document.createElement("th");
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = column.label;
      button.addEventListener("click", () => this.toggleSort(column.key));
      cell.appendChild(button);
      head.appendChild(cell);
    }

    const body = this.table.createTBody();
    for (const row of this.sortedRows()) {
      const tr = body.insertRow();
      tr.insertCell().textContent = String(row.rank);
      tr.insertCell().textContent = row.display_name;
      tr.insertCell().textContent = String(row.elo);
      tr.insertCell().textContent = row.votes.toLocaleString();
      tr.insertCell().textContent = row.win_rate_label;
      tr.insertCell().textContent = row.format;
    }
  }
}
