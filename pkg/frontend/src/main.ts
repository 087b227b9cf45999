/** Bootstrap: tabbed shell wiring the four views to the API client. */

import { ApiClient, ApiError } from "./api.js";
import { staleBanner } from "./html.js";
import { AppState } from "./state.js";
import { bindAuditBrowser, renderAuditList, renderSourcePane } from "./views/auditBrowser.js";
import { bindHierarchy, renderHierarchy } from "./views/hierarchy.js";
import { bindMergeQueue, renderMergeQueue } from "./views/mergeQueue.js";
import { bindThemeBoard, renderThemeBoard } from "./views/themeBoard.js";
import type { SaturationReport } from "./types.js";

const VIEWS = ["merges", "themes", "hierarchy", "audit"] as const;
type ViewName = (typeof VIEWS)[number];

class App {
  private readonly api = new ApiClient();
  private readonly state = new AppState(this.api);
  private saturation: SaturationReport | null = null;
  private view: ViewName = "merges";

  constructor(private readonly root: HTMLElement) {}

  async start(): Promise<void> {
    this.root.innerHTML =
      `<nav data-role="tabs">` +
      VIEWS.map((v) => `<button data-view="${v}">${v}</button>`).join("") +
      `<button data-role="refresh" title="reload all artifacts">refresh</button>` +
      `</nav>` +
      `<div data-role="banner"></div>` +
      `<main data-role="view"></main>` +
      `<div data-role="toast" class="toast"></div>`;
    this.root.querySelector("[data-role='tabs']")!.addEventListener("click", (event) => {
      const button = (event.target as HTMLElement).closest<HTMLElement>("button");
      if (!button) return;
      if (button.dataset.role === "refresh") {
        void this.reload();
        return;
      }
      const view = button.dataset.view as ViewName | undefined;
      if (view) {
        this.view = view;
        void this.render();
      }
    });
    await this.reload();
  }

  private toast(message: string): void {
    const node = this.root.querySelector<HTMLElement>("[data-role='toast']")!;
    node.textContent = message;
    node.classList.add("visible");
    setTimeout(() => node.classList.remove("visible"), 4000);
  }

  private async act(action: () => Promise<unknown>): Promise<void> {
    try {
      await action();
      await this.reload();
    } catch (error) {
      this.toast(error instanceof ApiError ? error.message : String(error));
    }
  }

  private async reload(): Promise<void> {
    try {
      await this.state.refresh();
      try {
        this.saturation = await this.api.saturation();
      } catch {
        this.saturation = null;
      }
    } catch (error) {
      this.toast(error instanceof ApiError ? error.message : String(error));
    }
    await this.render();
  }

  private async render(): Promise<void> {
    const banner = this.root.querySelector<HTMLElement>("[data-role='banner']")!;
    banner.innerHTML = staleBanner(this.state.staleStages());
    banner.querySelectorAll("[data-role='stale-banner']").forEach((node) => {
      const actions = this.state
        .staleStages()
        .map((s) => ` <button data-rerun="${s}">re-run ${s}</button>`)
        .join("");
      node.insertAdjacentHTML("beforeend", actions);
    });
    banner.querySelectorAll<HTMLElement>("button[data-rerun]").forEach((button) =>
      button.addEventListener("click", () =>
        this.act(() => this.api.rerunStage(button.dataset.rerun!)),
      ),
    );

    const main = this.root.querySelector<HTMLElement>("[data-role='view']")!;
    this.root.querySelectorAll<HTMLElement>("nav button[data-view]").forEach((b) => {
      b.classList.toggle("active", b.dataset.view === this.view);
    });

    if (this.view === "merges") {
      main.innerHTML = renderMergeQueue(this.state, this.saturation);
      bindMergeQueue(main, {
        accept: (id) => this.act(() => this.api.acceptMerge(id)),
        reject: (id) => this.act(() => this.api.rejectMerge(id)),
      });
    } else if (this.view === "themes") {
      main.innerHTML = renderThemeBoard(this.state.themes, this.state.uniqueCodes);
      bindThemeBoard(main, {
        move: (code, from, to) =>
          this.act(async () => {
            if (from) await this.api.moveCodes(from, { remove: [code] });
            if (to) await this.api.moveCodes(to, { add: [code] });
          }),
        rename: (themeId) => {
          const theme = this.state.themes?.themes.find((t) => t.id === themeId);
          const name = window.prompt("New theme name", theme?.name ?? "");
          if (name) void this.act(() => this.api.editTheme(themeId, { name }));
        },
      });
    } else if (this.view === "hierarchy") {
      main.innerHTML = renderHierarchy(this.state.hierarchy);
      bindHierarchy(main, {
        promote: (index) => this.act(() => this.api.promoteSubtheme(index)),
        assign: (index, parent) => this.act(() => this.api.assignSubtheme(index, parent)),
      });
    } else {
      main.innerHTML = renderAuditList(this.state.audit);
      bindAuditBrowser(main, {
        open: (recordIndex) => void this.openAuditRecord(recordIndex),
      });
    }
  }

  private async openAuditRecord(recordIndex: number): Promise<void> {
    const record = this.state.audit?.records[recordIndex];
    if (!record || !record.matched_doc) {
      this.toast("no source document for this record");
      return;
    }
    try {
      const doc = await this.api.document(record.matched_doc);
      const pane = this.root.querySelector<HTMLElement>("[data-role='source-pane']")!;
      pane.innerHTML = renderSourcePane(doc, record);
      pane.querySelector("mark")?.scrollIntoView({ block: "center" });
    } catch (error) {
      this.toast(error instanceof ApiError ? error.message : String(error));
    }
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  void new App(root).start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
