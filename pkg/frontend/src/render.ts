// Pure HTML renderers. Statistics are rendered verbatim (String(value) of
// the payload number) and tagged with data-stat so contract tests can check
// display fidelity against the recorded payload; everything else is layout.

import type { Campaign, Comparison, PosteriorCell, Rollout, Summary } from "./types.js";
import { DEFAULT_GEOMETRY, quantileTicks, violinOutline } from "./violin.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function stat(value: number | string): string {
  return `<span class="stat" data-stat="${escapeHtml(String(value))}">${escapeHtml(String(value))}</span>`;
}

export function renderCampaignList(campaigns: Campaign[]): string {
  if (campaigns.length === 0) {
    return `<p class="empty">No campaigns yet. POST /campaigns to create one.</p>`;
  }
  const rows = campaigns
    .map(
      (c) => `
      <tr>
        <td><a href="#/campaigns/${escapeHtml(c.id)}">${escapeHtml(c.name)}</a></td>
        <td class="status-${c.status}">${c.status}</td>
        <td>${c.policies.map(escapeHtml).join(", ")}</td>
        <td>${c.tasks.length}</td>
        <td>${stat(c.rollout_count)}</td>
      </tr>`,
    )
    .join("");
  return `
    <table class="campaigns">
      <thead><tr><th>campaign</th><th>status</th><th>policies</th><th>tasks</th><th>rollouts</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderViolin(policy: string, cell: PosteriorCell, letters: string): string {
  const geom = DEFAULT_GEOMETRY;
  const ticks = quantileTicks(cell, geom);
  const mid = geom.width / 2;
  return `
    <div class="violin" data-policy="${escapeHtml(policy)}">
      <div class="cld-letters" data-letters="${escapeHtml(letters)}">${escapeHtml(letters)}</div>
      <svg width="${geom.width}" height="${geom.height}" viewBox="0 0 ${geom.width} ${geom.height}">
        <polygon class="density" points="${violinOutline(cell, geom)}"></polygon>
        <line class="whisker" x1="${mid}" x2="${mid}" y1="${ticks.q05}" y2="${ticks.q95}"></line>
        <line class="median" x1="${mid - 14}" x2="${mid + 14}" y1="${ticks.q50}" y2="${ticks.q50}"></line>
        <circle class="mean" cx="${mid}" cy="${ticks.mean}" r="3"></circle>
      </svg>
      <div class="violin-label">${escapeHtml(policy)}</div>
      <div class="violin-n">n = ${stat(cell.trials)}</div>
      <div class="violin-mean">mean ${stat(cell.mean)}</div>
      <div class="violin-quantiles">
        q05 ${stat(cell.q05)} &middot; q95 ${stat(cell.q95)}
      </div>
    </div>`;
}

export function renderViolinRow(
  cells: Record<string, PosteriorCell | null>,
  comparison: Comparison | null,
  policies: string[],
): string {
  const violins = policies
    .map((policy) => {
      const cell = cells[policy];
      if (!cell) {
        return `<div class="violin missing" data-policy="${escapeHtml(policy)}">
          <div class="violin-label">${escapeHtml(policy)}</div>
          <div class="insufficient">insufficient data</div>
        </div>`;
      }
      const letters = comparison?.cld?.[policy] ?? "";
      return renderViolin(policy, cell, letters);
    })
    .join("");
  return `<div class="violin-row">${violins}</div>`;
}

export function renderSignificance(comparison: Comparison | null): string {
  if (!comparison || comparison.policies.length < 2) {
    return "";
  }
  const header = comparison.policies
    .map((p) => `<th>${escapeHtml(p)}</th>`)
    .join("");
  const rows = comparison.policies
    .map((row, i) => {
      const cells = comparison.policies
        .map((_col, j) => {
          const mark = i === j ? "" : comparison.significant[i][j] ? "&ne;" : "=";
          const cls = comparison.significant[i]?.[j] ? "sig" : "nonsig";
          return `<td class="${cls}">${mark}</td>`;
        })
        .join("");
      return `<tr><th>${escapeHtml(row)}</th>${cells}</tr>`;
    })
    .join("");
  return `
    <table class="significance">
      <caption>pairwise significance (&ne; = significantly different, FWER ${stat(comparison.alpha_fwer)})</caption>
      <thead><tr><th></th>${header}</tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderProgress(summary: Summary): string {
  const rows: string[] = [];
  for (const policy of summary.policies) {
    for (const task of summary.tasks) {
      const progress = summary.progress[policy]?.[task];
      if (!progress) continue;
      const percent =
        progress.target > 0 ? Math.min(100, (100 * progress.collected) / progress.target) : 0;
      rows.push(`
        <tr data-policy="${escapeHtml(policy)}" data-task="${escapeHtml(task)}">
          <td>${escapeHtml(policy)}</td>
          <td>${escapeHtml(task)}</td>
          <td class="bar-cell">
            <div class="bar"><div class="bar-fill" style="width:${percent}%"></div></div>
          </td>
          <td>${stat(progress.collected)} / ${stat(progress.target)}</td>
        </tr>`);
    }
  }
  return `
    <table class="progress">
      <thead><tr><th>policy</th><th>task</th><th></th><th>collected / target</th></tr></thead>
      <tbody>${rows.join("")}</tbody>
    </table>`;
}

export function renderPerTask(summary: Summary): string {
  if (!summary.per_task) return "";
  const comparisons = (summary.comparison ?? {}) as Record<string, Comparison | null>;
  return summary.tasks
    .map((task) => {
      const cells = summary.per_task![task];
      const comparison = comparisons[task] ?? null;
      return `
        <section class="task-section" data-task="${escapeHtml(task)}">
          <h3>${escapeHtml(task)}</h3>
          ${renderViolinRow(cells, comparison, summary.policies)}
          ${renderSignificance(comparison)}
        </section>`;
    })
    .join("");
}

export function renderDetail(summary: Summary, lastRefresh: string): string {
  const campaign = summary.campaign;
  const aggregateComparison = summary.aggregate_comparison ?? null;
  return `
    <header class="detail-header">
      <a href="#/">&larr; campaigns</a>
      <h2>${escapeHtml(campaign.name)}</h2>
      <span class="status-${campaign.status}">${campaign.status}</span>
      <span class="refresh" data-last-refresh="${escapeHtml(lastRefresh)}">updated ${escapeHtml(lastRefresh)}</span>
      <span class="records">records: ${stat(summary.record_count)}</span>
    </header>
    <div class="actions">
      <button id="stop-early" ${campaign.status === "stopped" ? "disabled" : ""}>stop early</button>
      <button id="extend-targets" ${campaign.status === "stopped" ? "disabled" : ""}>extend targets</button>
      <a href="#/campaigns/${escapeHtml(campaign.id)}/rollouts">rollout videos</a>
    </div>
    <section class="aggregate-section">
      <h3>aggregate (balanced across tasks)</h3>
      ${renderViolinRow(summary.aggregate, aggregateComparison, summary.policies)}
      ${renderSignificance(aggregateComparison)}
    </section>
    ${renderPerTask(summary)}
    <section class="progress-section">
      <h3>progress</h3>
      ${renderProgress(summary)}
    </section>`;
}

export function renderRollouts(rollouts: Rollout[]): string {
  if (rollouts.length === 0) {
    return `<p class="empty">no rollouts match the filter</p>`;
  }
  const rows = rollouts
    .map((r) => {
      const video = r.video_uri
        ? `<a href="${escapeHtml(r.video_uri)}" target="_blank" rel="noopener">video</a>`
        : "";
      return `
        <tr>
          <td>${escapeHtml(r.policy)}</td>
          <td>${escapeHtml(r.task)}</td>
          <td>${stat(r.seed)}</td>
          <td class="${r.success ? "success" : "failure"}">${r.success ? "success" : "failure"}</td>
          <td>${escapeHtml(r.timestamp)}</td>
          <td>${video}</td>
        </tr>`;
    })
    .join("");
  return `
    <table class="rollouts">
      <thead><tr><th>policy</th><th>task</th><th>seed</th><th>outcome</th><th>timestamp</th><th></th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner error">${escapeHtml(message)}</div>`;
}

/** The confirmation text shown before stop-early, listing current vs target. */
export function stopConfirmation(summary: Summary): string {
  const lines: string[] = [`Stop campaign "${summary.campaign.name}" early?`, ""];
  for (const policy of summary.policies) {
    for (const task of summary.tasks) {
      const progress = summary.progress[policy]?.[task];
      if (!progress) continue;
      lines.push(`${policy} / ${task}: ${progress.collected} of ${progress.target} collected`);
    }
  }
  lines.push("", "Stopped campaigns reject further rollouts.");
  return lines.join("\n");
}
