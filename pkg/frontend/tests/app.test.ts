import { beforeEach, describe, expect, it } from "vitest";

import { ArenaApi } from "../src/api";
import { VotingScreen } from "../src/app";
import { FakeRendererHarness } from "./fake-renderer";
import { FixtureService } from "./fixture-service";

let service: FixtureService;
let harness: FakeRendererHarness;

function makeScreen(mode: "standard" | "topology" = "standard"): VotingScreen {
  const api = new ArenaApi("", service.token);
  const screen = new VotingScreen(api, harness.factory, mode);
  document.body.appendChild(screen.root);
  return screen;
}

function identityLeak(): boolean {
  const text = document.body.innerHTML.toLowerCase();
  return ["alpha-gen", "beta-gen", "alpha gen", "beta gen", "mystery"].some((name) =>
    text.includes(name),
  );
}

beforeEach(() => {
  document.body.innerHTML = "";
  service = new FixtureService();
  service.install();
  harness = new FakeRendererHarness();
});

describe("pre-vote anonymity", () => {
  it("keeps model identities out of the DOM until the reveal", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    expect(screen.state.status).toBe("pending");
    expect(identityLeak()).toBe(false);

    await screen.submitVote("left");
    expect(screen.state.status).toBe("revealed");
    expect(identityLeak()).toBe(true); // reveal shows names, as it must
  });

  it("shows polygon counts for both panes before the vote", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    const badges = [...document.querySelectorAll(".polygon-badge")].map((b) => b.textContent);
    expect(badges.some((b) => b?.includes("52,100 polygons"))).toBe(true);
    expect(badges.some((b) => b?.includes("gaussian splat"))).toBe(true);
  });
});

describe("vote submission", () => {
  it("sends exactly one vote on a double click", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    const button = document.querySelector<HTMLButtonElement>(".vote-left")!;
    button.click();
    button.click(); // second click lands while the first is in flight
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(service.voteRequests.length).toBe(1);
    expect(screen.state.status).toBe("revealed");
  });

  it("disables both vote buttons after submission", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    await screen.submitVote("right");
    expect(document.querySelector<HTMLButtonElement>(".vote-left")!.disabled).toBe(true);
    expect(document.querySelector<HTMLButtonElement>(".vote-right")!.disabled).toBe(true);
  });

  it("reveals both names with ratings and marks the pick", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    await screen.submitVote("left");
    const reveal = document.querySelector(".reveal")!;
    expect(reveal.textContent).toContain("Alpha Gen");
    expect(reveal.textContent).toContain("Beta Gen");
    expect(reveal.textContent).toContain("1310");
    expect(reveal.textContent).toContain("1245");
    expect(reveal.querySelector(".reveal-left")!.classList.contains("chosen")).toBe(true);
    expect(document.querySelector<HTMLButtonElement>(".next-pair")!.hidden).toBe(false);
  });

  it("fetches a fresh pair automatically when the comparison expired", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    const first = screen.state.pair!.comparison_id;
    service.failNextVoteWith = 410;
    await screen.submitVote("left");
    expect(service.pairRequests.length).toBe(2);
    expect(screen.state.status).toBe("pending");
    expect(screen.state.pair!.comparison_id).not.toBe(first);
    expect(document.querySelector(".notice")!.textContent).toContain("expired");
  });

  it("surfaces an already-voted conflict and offers the next pair", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    service.failNextVoteWith = 409;
    await screen.submitVote("left");
    expect(document.querySelector(".notice")!.textContent).toContain("already voted");
    expect(document.querySelector<HTMLButtonElement>(".next-pair")!.hidden).toBe(false);
  });
});

describe("view modes", () => {
  it("toggles both panes between rendered and wireframe", async () => {
    const screen = makeScreen();
    await screen.nextPair();
    const [left, right] = harness.renderers;
    expect(left!.currentMode).toBe("rendered");
    expect(right!.currentMode).toBe("rendered");

    const toggle = document.querySelector<HTMLButtonElement>(".view-toggle")!;
    toggle.click();
    expect(left!.currentMode).toBe("wireframe");
    expect(right!.currentMode).toBe("wireframe");
    expect(toggle.textContent).toContain("rendered");
    const badge = document.querySelector(".polygon-badge")!;
    expect(badge.classList.contains("prominent")).toBe(true);

    toggle.click();
    expect(left!.currentMode).toBe("rendered");
    expect(badge.classList.contains("prominent")).toBe(false);
  });

  it("topology arena is wireframe-only with no surface toggle", async () => {
    const screen = makeScreen("topology");
    await screen.nextPair();
    expect(document.querySelector(".view-toggle")).toBeNull();
    expect(document.querySelector(".topology-hint")).not.toBeNull();
    expect(service.pairRequests).toEqual(["topology"]);
    for (const renderer of harness.renderers) {
      expect(renderer.currentMode).toBe("wireframe");
    }
    const badge = document.querySelector(".polygon-badge")!;
    expect(badge.classList.contains("prominent")).toBe(true);
  });
});

describe("asset load failures", () => {
  it("keeps the healthy pane usable and offers a retry", async () => {
    harness.failOnce.add(`/api/assets/${"b".repeat(64)}`);
    const screen = makeScreen();
    await screen.nextPair();

    const rightOverlay = document.querySelector<HTMLElement>(".pane-right .pane-overlay")!;
    expect(rightOverlay.hidden).toBe(false);
    expect(rightOverlay.textContent).toContain("Could not load");
    expect(document.querySelector<HTMLElement>(".pane-left .pane-overlay")!.hidden).toBe(true);
    // voting stays possible despite the broken pane
    expect(document.querySelector<HTMLButtonElement>(".vote-left")!.disabled).toBe(false);

    rightOverlay.querySelector<HTMLButtonElement>(".retry")!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(rightOverlay.hidden).toBe(true);
  });
});
