import { ApiError, ArenaApi } from "./api";
import { ComparisonState } from "./state";
import { Pane, RendererFactory } from "./viewer";
import type { ArenaMode, Side } from "./types";

/**
 * The voting screen: an anonymous side-by-side comparison, a view-mode
 * toggle (hidden in the topology arena, which is wireframe-only), vote
 * buttons, and the post-vote identity reveal.
 */
export class VotingScreen {
  readonly root: HTMLElement;
  readonly state: ComparisonState;
  private readonly panes: { left: Pane; right: Pane };
  private readonly promptImage: HTMLImageElement;
  private readonly toggleButton: HTMLButtonElement | null;
  private readonly voteButtons: Record<Side, HTMLButtonElement>;
  private readonly notice: HTMLElement;
  private readonly revealPanel: HTMLElement;
  private readonly nextButton: HTMLButtonElement;
  private voteInFlight = false;

  constructor(
    private readonly api: ArenaApi,
    rendererFactory: RendererFactory,
    private readonly mode: ArenaMode = "standard",
  ) {
    this.state = new ComparisonState(mode === "topology");
    this.root = document.createElement("div");
    this.root.className = `voting-screen mode-${mode}`;

    const promptBox = document.createElement("div");
    promptBox.className = "prompt";
    this.promptImage = document.createElement("img");
    this.promptImage.alt = "prompt image";
    promptBox.appendChild(this.promptImage);
    this.root.appendChild(promptBox);

    const panesBox = document.createElement("div");
    panesBox.className = "panes";
    this.panes = {
      left: new Pane("left", rendererFactory, () => this.syncControls()),
      right: new Pane("right", rendererFactory, () => this.syncControls()),
    };
    panesBox.appendChild(this.panes.left.root);
    panesBox.appendChild(this.panes.right.root);
    this.root.appendChild(panesBox);

    const controls = document.createElement("div");
    controls.className = "controls";

    if (mode === "topology") {
      this.toggleButton = null;
      const hint = document.createElement("span");
      hint.className = "topology-hint";
      hint.textContent = "Topology arena: wireframe and polygon counts only";
      controls.appendChild(hint);
    } else {
      this.toggleButton = document.createElement("button");
      this.toggleButton.type = "button";
      this.toggleButton.className = "view-toggle";
      this.toggleButton.addEventListener("click", () => this.toggleView());
      controls.appendChild(this.toggleButton);
    }

    this.voteButtons = {
      left: this.makeVoteButton("left"),
      right: this.makeVoteButton("right"),
    };
    controls.appendChild(this.voteButtons.left);
    controls.appendChild(this.voteButtons.right);
    this.root.appendChild(controls);

    this.notice = document.createElement("p");
    this.notice.className = "notice";
    this.notice.hidden = true;
    this.root.appendChild(this.notice);

    this.revealPanel = document.createElement("div");
    this.revealPanel.className = "reveal";
    this.revealPanel.hidden = true;
    this.root.appendChild(this.revealPanel);

    this.nextButton = document.createElement("button");
    this.nextButton.type = "button";
    this.nextButton.className = "next-pair";
    this.nextButton.textContent = "Next pair";
    this.nextButton.hidden = true;
    this.nextButton.addEventListener("click", () => void this.nextPair());
    this.root.appendChild(this.nextButton);

    this.syncControls();
  }

  private makeVoteButton(side: Side): HTMLButtonElement {
    const button = document.createElement("button");
    button.type = "button";
    button.className = `vote vote-${side}`;
    button.textContent = side === "left" ? "Prefer left" : "Prefer right";
    button.addEventListener("click", () => void this.submitVote(side));
    return button;
  }

  async nextPair(): Promise<void> {
    this.state.beginLoading();
    this.voteInFlight = false;
    this.revealPanel.hidden = true;
    this.revealPanel.replaceChildren();
    this.nextButton.hidden = true;
    this.clearNotice();
    this.panes.left.clear();
    this.panes.right.clear();
    this.syncControls();
    try {
      const pair = await this.api.fetchPair(this.mode);
      this.state.pairReady(pair);
      this.promptImage.src = this.api.assetUrl(pair.prompt.image_ref);
      await Promise.all([
        this.panes.left.show(pair.left, this.api.assetUrl(pair.left.file_ref), this.state.viewMode),
        this.panes.right.show(pair.right, this.api.assetUrl(pair.right.file_ref), this.state.viewMode),
      ]);
    } catch (error) {
      const detail =
        error instanceof ApiError && error.status === 409
          ? "No eligible pair is available yet. Check back soon."
          : `Could not fetch a comparison: ${error instanceof Error ? error.message : error}`;
      this.state.failed(detail);
      this.showNotice(detail);
    }
    this.syncControls();
  }

  private toggleView(): void {
    const mode = this.state.toggleViewMode();
    this.panes.left.setViewMode(mode);
    this.panes.right.setViewMode(mode);
    this.syncControls();
  }

  async submitVote(side: Side): Promise<void> {
    // client-side single-submission guard: first click wins
    if (this.voteInFlight || this.state.status !== "pending" || !this.state.pair) return;
    this.voteInFlight = true;
    this.state.submitting();
    this.syncControls();
    try {
      const response = await this.api.submitVote(this.state.pair.comparison_id, side);
      this.state.revealed(response.reveal);
      this.renderReveal(side);
    } catch (error) {
      if (error instanceof ApiError && error.status === 410) {
        await this.nextPair();
        this.showNotice("That comparison expired; here is a fresh pair.");
        return;
      }
      if (error instanceof ApiError && error.status === 409) {
        this.showNotice("This comparison was already voted on.");
        this.nextButton.hidden = false;
      } else {
        this.showNotice(`Vote failed: ${error instanceof Error ? error.message : error}`);
        this.state.backToPending();
        this.voteInFlight = false;
      }
    }
    this.syncControls();
  }

  private renderReveal(votedSide: Side): void {
    const reveal = this.state.reveal;
    if (!reveal) return;
    this.revealPanel.hidden = false;
    const heading = document.createElement("h3");
    heading.textContent = "Identities revealed";
    this.revealPanel.appendChild(heading);
    for (const side of ["left", "right"] as const) {
      const entry = reveal[side];
      const row = document.createElement("p");
      row.className = `reveal-${side}` + (side === votedSide ? " chosen" : "");
      row.textContent =
        `${side === "left" ? "Left" : "Right"}: ${entry.display_name} ` +
        `(rating ${Math.round(entry.elo)}, ${entry.votes} votes)` +
        (side === votedSide ? " - your pick" : "");
      this.revealPanel.appendChild(row);
    }
    this.nextButton.hidden = false;
  }

  private showNotice(text: string): void {
    this.notice.textContent = text;
    this.notice.hidden = false;
  }

  private clearNotice(): void {
    this.notice.hidden = true;
    this.notice.textContent = "";
  }

  private syncControls(): void {
    const votable = this.state.status === "pending" && !this.voteInFlight;
    this.voteButtons.left.disabled = !votable;
    this.voteButtons.right.disabled = !votable;
    if (this.toggleButton) {
      this.toggleButton.textContent =
        this.state.viewMode === "rendered" ? "Switch to wireframe" : "Switch to rendered";
      this.toggleButton.disabled = this.state.status === "loading";
    }
  }

  dispose(): void {
    this.panes.left.dispose();
    this.panes.right.dispose();
  }
}
