// Wiring: hash routing, the polling loop, and the stop/extend actions.
// Actions are optimistic-disabled until acknowledged; server errors surface
// as a non-blocking banner while the stale view stays up, labeled with its
// last refresh time.

import { FoundryApi } from "./api.js";
import {
  renderCampaignList,
  renderDetail,
  renderErrorBanner,
  renderRollouts,
  stopConfirmation,
} from "./render.js";
import type { Summary } from "./types.js";

export interface AppOptions {
  api?: FoundryApi;
  pollIntervalMs?: number;
  confirmFn?: (message: string) => boolean;
  promptFn?: (message: string, initial: string) => string | null;
}

export class App {
  private api: FoundryApi;
  private pollIntervalMs: number;
  private confirmFn: (message: string) => boolean;
  private promptFn: (message: string, initial: string) => string | null;
  private timer: ReturnType<typeof setInterval> | null = null;
  lastSummary: Summary | null = null;

  constructor(private root: HTMLElement, options: AppOptions = {}) {
    this.api = options.api ?? new FoundryApi();
    this.pollIntervalMs = options.pollIntervalMs ?? 5000;
    this.confirmFn = options.confirmFn ?? ((message) => window.confirm(message));
    this.promptFn = options.promptFn ?? ((message, initial) => window.prompt(message, initial));
  }

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    void this.route();
  }

  private stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async route(): Promise<void> {
    this.stopPolling();
    const hash = window.location.hash || "#/";
    const rolloutsMatch = hash.match(/^#\/campaigns\/([^/]+)\/rollouts$/);
    const detailMatch = hash.match(/^#\/campaigns\/([^/]+)$/);
    if (rolloutsMatch) {
      await this.showRollouts(rolloutsMatch[1]);
    } else if (detailMatch) {
      await this.showDetail(detailMatch[1]);
      this.timer = setInterval(() => void this.showDetail(detailMatch[1]), this.pollIntervalMs);
    } else {
      await this.showList();
    }
  }

  private banner(message: string): void {
    const element = document.createElement("div");
    element.innerHTML = renderErrorBanner(message);
    this.root.prepend(element.firstElementChild as HTMLElement);
  }

  async showList(): Promise<void> {
    try {
      const campaigns = await this.api.listCampaigns();
      this.root.innerHTML = `<h2>campaigns</h2>${renderCampaignList(campaigns)}`;
    } catch (error) {
      this.banner(`failed to load campaigns: ${error}`);
    }
  }

  async showDetail(id: string): Promise<void> {
    try {
      const summary = await this.api.getSummary(id, "per_task");
      this.lastSummary = summary;
      this.root.innerHTML = renderDetail(summary, new Date().toISOString());
      this.bindActions(id);
    } catch (error) {
      // Keep the stale view; it stays labeled with its old refresh time.
      this.banner(`refresh failed: ${error}`);
    }
  }

  private bindActions(id: string): void {
    const stopButton = this.root.querySelector<HTMLButtonElement>("#stop-early");
    stopButton?.addEventListener("click", () => void this.stopEarly(id, stopButton));
    const extendButton = this.root.querySelector<HTMLButtonElement>("#extend-targets");
    extendButton?.addEventListener("click", () => void this.extendTargets(id, extendButton));
  }

  async stopEarly(id: string, button?: HTMLButtonElement): Promise<boolean> {
    if (!this.lastSummary) return false;
    if (!this.confirmFn(stopConfirmation(this.lastSummary))) {
      return false;
    }
    if (button) button.disabled = true;
    try {
      await this.api.stopCampaign(id);
      await this.showDetail(id);
      return true;
    } catch (error) {
      this.banner(`stop failed: ${error}`);
      if (button) button.disabled = false;
      return false;
    }
  }

  async extendTargets(id: string, button?: HTMLButtonElement): Promise<boolean> {
    if (!this.lastSummary) return false;
    const current = this.lastSummary.campaign.target_rollouts;
    const edited = this.promptFn(
      "Per-task rollout targets (JSON object, task -> count):",
      JSON.stringify(current),
    );
    if (edited === null) return false;
    let targets: Record<string, number>;
    try {
      targets = JSON.parse(edited);
    } catch {
      this.banner("targets must be a JSON object of task -> count");
      return false;
    }
    if (button) button.disabled = true;
    try {
      await this.api.updateTargets(id, targets);
      await this.showDetail(id);
      return true;
    } catch (error) {
      this.banner(`target update failed: ${error}`);
      if (button) button.disabled = false;
      return false;
    }
  }

  async showRollouts(id: string): Promise<void> {
    try {
      const rollouts = await this.api.listRollouts(id);
      this.root.innerHTML = `
        <header class="detail-header">
          <a href="#/campaigns/${id}">&larr; back</a>
          <h2>rollouts</h2>
        </header>
        ${renderRollouts(rollouts)}`;
    } catch (error) {
      this.banner(`failed to load rollouts: ${error}`);
    }
  }
}
