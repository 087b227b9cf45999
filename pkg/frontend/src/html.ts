/** String-building helpers; views render to HTML so they stay testable headless. */

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function verdictBadge(verdict: string | null | undefined): string {
  if (!verdict) return "";
  const label = verdict.replace(/_/g, " ");
  return `<span class="badge badge-${escapeHtml(verdict)}">${escapeHtml(label)}</span>`;
}

/** Wrap [start, end) spans of raw text in <mark>, escaping everything. */
export function highlightSpans(text: string, spans: [number, number][]): string {
  const ordered = [...spans]
    .filter(([s, e]) => s >= 0 && e > s && s < text.length)
    .sort((a, b) => a[0] - b[0]);
  let cursor = 0;
  let out = "";
  for (const [start, end] of ordered) {
    if (start < cursor) continue; // overlapping span; keep the first
    out += escapeHtml(text.slice(cursor, start));
    out += `<mark>${escapeHtml(text.slice(start, Math.min(end, text.length)))}</mark>`;
    cursor = Math.min(end, text.length);
  }
  out += escapeHtml(text.slice(cursor));
  return out;
}

export function staleBanner(staleStages: string[]): string {
  if (staleStages.length === 0) return "";
  const list = staleStages.map(escapeHtml).join(", ");
  return (
    `<div class="banner banner-stale" data-role="stale-banner">` +
    `Stale stages after your edits: <strong>${list}</strong>. ` +
    `Re-run them to refresh downstream artifacts.</div>`
  );
}
