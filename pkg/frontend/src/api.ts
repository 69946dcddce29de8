// HTTP client for the campaign service. Every mutation in the UI goes
// through exactly these documented endpoints; the UI holds no authoritative
// state of its own.

import type { Campaign, Rollout, Summary } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class FoundryApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      const text = await response.text();
      throw new ApiError(response.status, `${method} ${path} -> ${response.status}: ${text}`);
    }
    return (await response.json()) as T;
  }

  listCampaigns(): Promise<Campaign[]> {
    return this.request("GET", "/campaigns");
  }

  getCampaign(id: string): Promise<Campaign> {
    return this.request("GET", `/campaigns/${id}`);
  }

  getSummary(id: string, view: "per_task" | "aggregate" = "per_task"): Promise<Summary> {
    return this.request("GET", `/campaigns/${id}/summary?view=${view}`);
  }

  stopCampaign(id: string): Promise<Campaign> {
    return this.request("POST", `/campaigns/${id}/stop`);
  }

  updateTargets(id: string, targets: Record<string, number>): Promise<Campaign> {
    return this.request("PATCH", `/campaigns/${id}/targets`, { target_rollouts: targets });
  }

  listRollouts(id: string, filter: { policy?: string; task?: string } = {}): Promise<Rollout[]> {
    const params = new URLSearchParams();
    if (filter.policy !== undefined) params.set("policy", filter.policy);
    if (filter.task !== undefined) params.set("task", filter.task);
    const query = params.toString();
    return this.request("GET", `/campaigns/${id}/rollouts${query ? "?" + query : ""}`);
  }
}
