/** Merge queue: inspect applied merges with both codes' quotes, accept or reject. */

import { escapeHtml, verdictBadge } from "../html.js";
import type { AppState, MergeQueueEntry } from "../state.js";
import type { SaturationReport, UniqueCode } from "../types.js";

function quoteList(code: UniqueCode, state: AppState): string {
  const items = code.quotes
    .map((q) => {
      const badge = verdictBadge(state.verdictFor(code.uid, q.quote));
      return `<li>"${escapeHtml(q.quote)}" <cite>${escapeHtml(q.source_doc)}</cite>${badge}</li>`;
    })
    .join("");
  return `<ul class="quotes">${items}</ul>`;
}

function entryCard(entry: MergeQueueEntry, state: AppState): string {
  const { decision, incoming, host } = entry;
  const rationale = decision.rationale
    ? `<p class="rationale">${escapeHtml(decision.rationale)}</p>`
    : `<p class="rationale rationale-missing">no rationale recorded</p>`;
  const incomingBlock = incoming
    ? `<div class="code-side"><h4>merged code: ${escapeHtml(incoming.code_name)}</h4>` +
      `<p>${escapeHtml(incoming.description)}</p>` +
      `<ul class="quotes"><li>"${escapeHtml(incoming.quote)}" <cite>${escapeHtml(incoming.source_doc)}</cite>` +
      `${verdictBadge(host ? state.verdictFor(host.uid, incoming.quote) : null)}</li></ul></div>`
    : `<div class="code-side"><h4>merged code ${escapeHtml(decision.target)}</h4></div>`;
  const hostBlock = host
    ? `<div class="code-side"><h4>kept code: ${escapeHtml(host.code_name)}</h4>` +
      `<p>${escapeHtml(host.description)}</p>${quoteList(host, state)}</div>`
    : `<div class="code-side"><h4>kept code ${escapeHtml(decision.matched)}</h4></div>`;
  return (
    `<article class="merge-card" data-decision="${decision.id}">` +
    `<header>decision #${decision.id} &middot; round ${decision.round}</header>` +
    rationale +
    `<div class="code-pair">${incomingBlock}${hostBlock}</div>` +
    `<footer>` +
    `<button data-action="accept" data-decision="${decision.id}">accept merge</button>` +
    `<button data-action="reject" data-decision="${decision.id}" class="danger">reject merge</button>` +
    `</footer></article>`
  );
}

export function renderMergeQueue(state: AppState, saturation: SaturationReport | null): string {
  const queue = state.mergeQueue();
  const counter = saturation
    ? `<p class="counter" data-role="unique-count">` +
      `${saturation.unique_codes} unique codes from ${saturation.total_codes} ` +
      `(ratio ${saturation.ratio.toFixed(3)})</p>`
    : "";
  if (queue.length === 0) {
    return `${counter}<p class="empty">No pending merge decisions to review.</p>`;
  }
  return counter + queue.map((entry) => entryCard(entry, state)).join("");
}

export interface MergeQueueHandlers {
  accept(decisionId: number): void;
  reject(decisionId: number): void;
}

export function bindMergeQueue(root: HTMLElement, handlers: MergeQueueHandlers): void {
  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLElement>("button[data-action]");
    if (!button) return;
    const id = Number(button.dataset.decision);
    if (button.dataset.action === "accept") handlers.accept(id);
    if (button.dataset.action === "reject") handlers.reject(id);
  });
}
