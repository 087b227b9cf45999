/** Hierarchy editor: promote sub-themes to top level, move them between parents. */

import { escapeHtml } from "../html.js";
import type { Hierarchy } from "../types.js";

export function renderHierarchy(hierarchy: Hierarchy | null): string {
  if (!hierarchy) {
    return `<p class="empty">No hierarchy yet; run the hierarchy stage first.</p>`;
  }
  const flags = hierarchy.flags.length
    ? `<div class="banner banner-flags">Validation flags: ${hierarchy.flags
        .map(escapeHtml)
        .join("; ")}</div>`
    : "";
  const parentOptions = hierarchy.parents
    .map((p, i) => `<option value="${i}">${escapeHtml(p.name)}</option>`)
    .join("");
  const parents = hierarchy.parents
    .map((parent, parentIndex) => {
      const subs = parent.subtheme_indices
        .map((i) => {
          const sub = hierarchy.subthemes[i];
          const name = sub ? sub.name : `sub-theme ${i}`;
          return (
            `<li data-subtheme="${i}">[${i}] ${escapeHtml(name)} ` +
            `<button data-action="promote" data-subtheme="${i}">promote</button>` +
            `<select data-role="assign" data-subtheme="${i}">` +
            `<option value="">move to...</option>${parentOptions}</select></li>`
          );
        })
        .join("");
      return (
        `<section class="parent-theme" data-parent="${parentIndex}">` +
        `<h3>${escapeHtml(parent.name)}</h3>` +
        `<p>${escapeHtml(parent.description)}</p>` +
        `<ul class="subthemes">${subs}</ul></section>`
      );
    })
    .join("");
  return flags + `<div class="hierarchy">${parents}</div>`;
}

export interface HierarchyHandlers {
  promote(subthemeIndex: number): void;
  assign(subthemeIndex: number, parentIndex: number): void;
}

export function bindHierarchy(root: HTMLElement, handlers: HierarchyHandlers): void {
  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLElement>(
      "button[data-action='promote']",
    );
    if (button) handlers.promote(Number(button.dataset.subtheme));
  });
  root.addEventListener("change", (event) => {
    const select = event.target as HTMLSelectElement;
    if (select.dataset.role !== "assign" || select.value === "") return;
    handlers.assign(Number(select.dataset.subtheme), Number(select.value));
  });
}
