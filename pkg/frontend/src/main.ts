import { ArenaApi } from "./api";
import { VotingScreen } from "./app";
import { LeaderboardView } from "./leaderboard";
import { threeRendererFactory } from "./three-viewer";
import type { ArenaMode } from "./types";

const TOKEN_KEY = "arena-token";

function buildTokenBar(api: ArenaApi): HTMLElement {
  const bar = document.createElement("div");
  bar.className = "token-bar";
  const label = document.createElement("label");
  label.textContent = "Access token: ";
  const input = document.createElement("input");
  input.type = "password";
  input.placeholder = "paste your token to vote";
  input.value = localStorage.getItem(TOKEN_KEY) ?? "";
  api.setToken(input.value || null);
  input.addEventListener("change", () => {
    localStorage.setItem(TOKEN_KEY, input.value);
    api.setToken(input.value || null);
  });
  label.appendChild(input);
  bar.appendChild(label);
  return bar;
}

function main(): void {
  const api = new ArenaApi("");
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  root.appendChild(buildTokenBar(api));

  const tabs = document.createElement("nav");
  tabs.className = "tabs";
  const content = document.createElement("main");
  root.appendChild(tabs);
  root.appendChild(content);

  let voting: VotingScreen | null = null;
  const show = (view: "vote" | "topology" | "board"): void => {
    voting?.dispose();
    voting = null;
    content.replaceChildren();
    if (view === "board") {
      const board = new LeaderboardView(api);
      content.appendChild(board.root);
      void board.refresh();
      return;
    }
    const mode: ArenaMode = view === "topology" ? "topology" : "standard";
    voting = new VotingScreen(api, threeRendererFactory, mode);
    content.appendChild(voting.root);
    void voting.nextPair();
  };

  for (const [view, label] of [
    ["vote", "Vote"],
    ["topology", "Topology arena"],
    ["board", "Leaderboard"],
  ] as const) {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = label;
    button.addEventListener("click", () => show(view));
    tabs.appendChild(button);
  }

  show("vote");
}

main();
