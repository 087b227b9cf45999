/** Theme board: every theme as a column, unassigned codes in their own tray.
 *
 * Codes move by drag and drop (or by the per-card move select, which keeps
 * the board usable without a pointer).
 */

import { escapeHtml } from "../html.js";
import type { Theme, ThemeSet, UniqueCode } from "../types.js";

function moveSelect(codeIndex: number, themes: Theme[], current: string | null): string {
  const options = [
    `<option value="">move to...</option>`,
    ...themes
      .filter((t) => t.id !== current)
      .map((t) => `<option value="${escapeHtml(t.id)}">${escapeHtml(t.name)}</option>`),
  ];
  if (current !== null) {
    options.push(`<option value="__unassigned__">unassigned tray</option>`);
  }
  return (
    `<select data-role="move" data-code="${codeIndex}" data-from="${current ?? ""}">` +
    options.join("") +
    `</select>`
  );
}

function codeCard(
  index: number,
  code: UniqueCode | undefined,
  themes: Theme[],
  current: string | null,
): string {
  const name = code ? code.code_name : `code ${index}`;
  const quotes = code ? code.quotes.length : 0;
  return (
    `<div class="code-card" draggable="true" data-code="${index}" data-from="${current ?? ""}">` +
    `<span class="code-name">[${index}] ${escapeHtml(name)}</span>` +
    `<span class="code-meta">${quotes} quote${quotes === 1 ? "" : "s"}</span>` +
    moveSelect(index, themes, current) +
    `</div>`
  );
}

export function renderThemeBoard(themeset: ThemeSet | null, codes: UniqueCode[]): string {
  if (!themeset) {
    return `<p class="empty">No themes yet; run the themes stage first.</p>`;
  }
  const columns = themeset.themes
    .map((theme) => {
      const cards = theme.code_indices
        .map((i) => codeCard(i, codes[i], themeset.themes, theme.id))
        .join("");
      return (
        `<section class="theme-column" data-theme="${escapeHtml(theme.id)}">` +
        `<h3>${escapeHtml(theme.id)}: <span data-role="theme-name">${escapeHtml(theme.name)}</span>` +
        ` <button data-action="rename" data-theme="${escapeHtml(theme.id)}">rename</button></h3>` +
        `<p class="theme-desc">${escapeHtml(theme.description)}</p>` +
        `<div class="cards" data-dropzone="${escapeHtml(theme.id)}">${cards}</div>` +
        `</section>`
      );
    })
    .join("");
  const trayCards = themeset.unassigned
    .map((i) => codeCard(i, codes[i], themeset.themes, null))
    .join("");
  const tray =
    `<section class="theme-column tray" data-theme="__unassigned__">` +
    `<h3>Unassigned (${themeset.unassigned.length})</h3>` +
    `<div class="cards" data-dropzone="__unassigned__">${trayCards}</div></section>`;
  return `<div class="board">${columns}${tray}</div>`;
}

export interface ThemeBoardHandlers {
  move(codeIndex: number, fromTheme: string | null, toTheme: string | null): void;
  rename(themeId: string): void;
}

export function bindThemeBoard(root: HTMLElement, handlers: ThemeBoardHandlers): void {
  root.addEventListener("change", (event) => {
    const select = event.target as HTMLSelectElement;
    if (select.dataset.role !== "move" || !select.value) return;
    const from = select.dataset.from || null;
    const to = select.value === "__unassigned__" ? null : select.value;
    handlers.move(Number(select.dataset.code), from, to);
  });
  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLElement>("button[data-action='rename']");
    if (button) handlers.rename(button.dataset.theme as string);
  });
  root.addEventListener("dragstart", (event) => {
    const card = (event.target as HTMLElement).closest<HTMLElement>(".code-card");
    if (!card || !(event as DragEvent).dataTransfer) return;
    (event as DragEvent).dataTransfer!.setData(
      "application/json",
      JSON.stringify({ code: Number(card.dataset.code), from: card.dataset.from || null }),
    );
  });
  root.addEventListener("dragover", (event) => {
    if ((event.target as HTMLElement).closest("[data-dropzone]")) event.preventDefault();
  });
  root.addEventListener("drop", (event) => {
    const zone = (event.target as HTMLElement).closest<HTMLElement>("[data-dropzone]");
    const transfer = (event as DragEvent).dataTransfer;
    if (!zone || !transfer) return;
    event.preventDefault();
    try {
      const { code, from } = JSON.parse(transfer.getData("application/json"));
      const to = zone.dataset.dropzone === "__unassigned__" ? null : zone.dataset.dropzone!;
      if (from !== to) handlers.move(code, from, to);
    } catch {
      // foreign drag payload; ignore
    }
  });
}
