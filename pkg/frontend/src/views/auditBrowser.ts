/** Audit browser: per-quote verdicts; clicking a record opens the source
 * document with the evidence span highlighted and scrolled into view. */

import { escapeHtml, highlightSpans, verdictBadge } from "../html.js";
import type { AuditArtifact, AuditRecord, DocumentFull } from "../types.js";

export function renderAuditList(audit: AuditArtifact | null): string {
  if (!audit) {
    return `<p class="empty">No audit yet; run the audit stage first.</p>`;
  }
  const counts = audit.summary.counts;
  const summary =
    `<p class="counter">${audit.summary.sample_size} quotes audited: ` +
    `${counts.verbatim} verbatim, ${counts.modified} modified, ` +
    `${counts.fabricated} fabricated</p>`;
  const rows = audit.records
    .map((record, i) => {
      const doc = record.matched_doc ? escapeHtml(record.matched_doc) : "&mdash;";
      const score =
        record.evidence.score === null ? "" : ` (score ${record.evidence.score.toFixed(3)})`;
      return (
        `<tr data-record="${i}" class="audit-row verdict-${record.verdict}">` +
        `<td>${verdictBadge(record.verdict)}${score}</td>` +
        `<td class="quote-cell">"${escapeHtml(record.quote)}"</td>` +
        `<td>${doc}</td></tr>`
      );
    })
    .join("");
  return (
    summary +
    `<table class="audit-table"><thead><tr><th>verdict</th><th>quote</th><th>source</th></tr></thead>` +
    `<tbody>${rows}</tbody></table><div data-role="source-pane" class="source-pane"></div>`
  );
}

export function renderSourcePane(doc: DocumentFull, record: AuditRecord): string {
  const body = highlightSpans(doc.text, record.evidence.spans);
  return (
    `<h3>${escapeHtml(doc.id)} <small>(${escapeHtml(doc.group)})</small></h3>` +
    `<pre class="source-text">${body}</pre>`
  );
}

export interface AuditHandlers {
  open(recordIndex: number): void;
}

export function bindAuditBrowser(root: HTMLElement, handlers: AuditHandlers): void {
  root.addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest<HTMLElement>("tr[data-record]");
    if (row) handlers.open(Number(row.dataset.record));
  });
}
