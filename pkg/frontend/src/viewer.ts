import type { AssetFormat, PairAsset, ViewMode } from "./types";

/** Rendering backend for one pane; the real implementation wraps three.js. */
export interface AssetRenderer {
  mount(viewport: HTMLElement): void;
  load(assetUrl: string, format: AssetFormat): Promise<void>;
  setViewMode(mode: ViewMode): void;
  dispose(): void;
}

export type RendererFactory = () => AssetRenderer;

/**
 * One comparison pane: viewport, polygon-count badge, load-failure overlay
 * with retry. Failures stay local to the pane; the sibling keeps working.
 */
export class Pane {
  readonly root: HTMLElement;
  private readonly viewport: HTMLElement;
  private readonly badge: HTMLElement;
  private readonly overlay: HTMLElement;
  private readonly renderer: AssetRenderer;
  private asset: PairAsset | null = null;
  private assetUrl: string | null = null;

  constructor(
    readonly side: "left" | "right",
    rendererFactory: RendererFactory,
    private readonly onStateChange: () => void,
  ) {
    this.root = document.createElement("section");
    this.root.className = `pane pane-${side}`;
    this.root.dataset.side = side;

    const title = document.createElement("h3");
    title.textContent = side === "left" ? "Left" : "Right";
    this.root.appendChild(title);

    this.viewport = document.createElement("div");
    this.viewport.className = "viewport";
    this.root.appendChild(this.viewport);

    this.badge = document.createElement("div");
    this.badge.className = "polygon-badge";
    this.root.appendChild(this.badge);

    this.overlay = document.createElement("div");
    this.overlay.className = "pane-overlay";
    this.overlay.hidden = true;
    this.root.appendChild(this.overlay);

    this.renderer = rendererFactory();
    this.renderer.mount(this.viewport);
  }

  get loaded(): boolean {
    return this.asset !== null && this.overlay.hidden === true;
  }

  async show(asset: PairAsset, assetUrl: string, viewMode: ViewMode): Promise<void> {
    this.asset = asset;
    this.assetUrl = assetUrl;
    this.badge.textContent =
      asset.format === "mesh"
        ? `${asset.polygon_count.toLocaleString()} polygons`
        : asset.polygon_count > 0
          ? `${asset.polygon_count.toLocaleString()} primitives`
          : "gaussian splat";
    this.setViewMode(viewMode);
    await this.loadCurrent();
  }

  private async loadCurrent(): Promise<void> {
    if (!this.asset || !this.assetUrl) return;
    this.overlay.hidden = true;
    this.overlay.replaceChildren();
    try {
      await this.renderer.load(this.assetUrl, this.asset.format);
    } catch (error) {
      this.showError(error instanceof Error ? error.message : String(error));
    }
    this.onStateChange();
  }

  private showError(message: string): void {
    this.overlay.hidden = false;
    const text = document.createElement("p");
    text.className = "load-error";
    text.textContent = `Could not load this asset: ${message}`;
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.loadCurrent());
    this.overlay.replaceChildren(text, retry);
  }

  setViewMode(mode: ViewMode): void {
    this.renderer.setViewMode(mode);
    // wireframe evaluation makes geometry cost the headline information
    this.badge.classList.toggle("prominent", mode === "wireframe");
  }

  clear(): void {
    this.asset = null;
    this.assetUrl = null;
    this.badge.textContent = "";
    this.overlay.hidden = true;
    this.overlay.replaceChildren();
  }

  dispose(): void {
    this.renderer.dispose();
  }
}
