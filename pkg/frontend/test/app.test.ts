// Action flows: confirmation before stop-early, JSON-edited targets before
// extend, and no request at all when the user declines.

import { describe, expect, it } from "vitest";

import { FoundryApi } from "../src/api.js";
import { App } from "../src/app.js";
import { stopConfirmation } from "../src/render.js";
import type { Summary } from "../src/types.js";
import fixtures from "./fixtures.json";

const summary = fixtures.summary as unknown as Summary;

class FakeRoot {
  innerHTML = "";
  querySelector(): null {
    return null;
  }
  prepend(): void {}
}

function appWith(confirmAnswer: boolean, promptAnswer: string | null) {
  const requests: { url: string; method: string; body?: string }[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    requests.push({
      url,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? init.body : undefined,
    });
    const payload = url.includes("/summary") ? summary : summary.campaign;
    return new Response(JSON.stringify(payload), { status: 200 });
  };
  const confirmations: string[] = [];
  const app = new App(new FakeRoot() as unknown as HTMLElement, {
    api: new FoundryApi("", fetchFn),
    confirmFn: (message) => {
      confirmations.push(message);
      return confirmAnswer;
    },
    promptFn: () => promptAnswer,
  });
  app.lastSummary = summary;
  return { app, requests, confirmations };
}

describe("stop-early flow", () => {
  it("shows current vs target counts in the confirmation dialog", () => {
    const message = stopConfirmation(summary);
    for (const policy of summary.policies) {
      for (const task of summary.tasks) {
        const progress = summary.progress[policy][task];
        expect(message).toContain(
          `${policy} / ${task}: ${progress.collected} of ${progress.target} collected`,
        );
      }
    }
  });

  it("declining the dialog issues no request", async () => {
    const { app, requests, confirmations } = appWith(false, null);
    const stopped = await app.stopEarly(summary.campaign.id);
    expect(stopped).toBe(false);
    expect(confirmations).toHaveLength(1);
    expect(requests).toHaveLength(0);
  });

  it("accepting issues POST /stop then refreshes the summary", async () => {
    const { app, requests } = appWith(true, null);
    const stopped = await app.stopEarly(summary.campaign.id);
    expect(stopped).toBe(true);
    expect(requests[0]).toMatchObject({
      method: "POST",
      url: `/campaigns/${summary.campaign.id}/stop`,
    });
    expect(requests[1].url).toContain("/summary?view=per_task");
  });
});

describe("extend-targets flow", () => {
  it("cancelling the prompt issues no request", async () => {
    const { app, requests } = appWith(true, null);
    expect(await app.extendTargets(summary.campaign.id)).toBe(false);
    expect(requests).toHaveLength(0);
  });

  it("sends the user-entered per-task counts via PATCH /targets", async () => {
    const edited = { t0: 75, t1: 75, t2: 75, t3: 75 };
    const { app, requests } = appWith(true, JSON.stringify(edited));
    expect(await app.extendTargets(summary.campaign.id)).toBe(true);
    expect(requests[0].method).toBe("PATCH");
    expect(requests[0].url).toBe(`/campaigns/${summary.campaign.id}/targets`);
    expect(JSON.parse(requests[0].body!)).toEqual({ target_rollouts: edited });
  });
});
