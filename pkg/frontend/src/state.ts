/** Client-side cache of server artifacts.
 *
 * The UI is stateless with respect to analysis data: everything here is a
 * fetched copy, and `refresh` reproduces server state exactly.
 */

import type { ApiClient } from "./api.js";
import type {
  AuditArtifact,
  Hierarchy,
  InitialCode,
  MergeDecision,
  ProjectState,
  ThemeSet,
  UniqueCode,
  Verdict,
} from "./types.js";

export interface MergeQueueEntry {
  decision: MergeDecision;
  incoming: InitialCode | null;
  host: UniqueCode | null;
}

export class AppState {
  state: ProjectState | null = null;
  uniqueCodes: UniqueCode[] = [];
  decisions: MergeDecision[] = [];
  themes: ThemeSet | null = null;
  hierarchy: Hierarchy | null = null;
  audit: AuditArtifact | null = null;
  initialCodes: Map<string, InitialCode> = new Map();

  constructor(private readonly api: ApiClient) {}

  async refresh(): Promise<void> {
    this.state = await this.api.state();
    this.uniqueCodes = [];
    this.decisions = [];
    this.themes = null;
    this.hierarchy = null;
    this.audit = null;

    const stages = this.state.stages;
    if (stages.code === "done" || stages.code === "stale") {
      const { codesets } = await this.api.codes();
      this.initialCodes = new Map();
      for (const set of codesets) {
        for (const code of set.codes) {
          this.initialCodes.set(`${code.source_doc}:${code.index}`, code);
        }
      }
    }
    if (stages.dedup === "done" || stages.dedup === "stale") {
      this.uniqueCodes = (await this.api.uniqueCodes()).codes;
      this.decisions = (await this.api.mergeDecisions()).decisions;
    }
    await Promise.all([
      this.loadOptional("themes", async () => {
        this.themes = await this.api.themes();
      }),
      this.loadOptional("hierarchy", async () => {
        this.hierarchy = await this.api.hierarchy();
      }),
      this.loadOptional("audit", async () => {
        this.audit = await this.api.audit();
      }),
    ]);
  }

  private async loadOptional(_name: string, loader: () => Promise<void>): Promise<void> {
    try {
      await loader();
    } catch {
      // artifact not produced yet; the view renders its empty state
    }
  }

  staleStages(): string[] {
    if (!this.state) return [];
    return Object.entries(this.state.stages)
      .filter(([, status]) => status === "stale")
      .map(([stage]) => stage)
      .sort();
  }

  /** Applied, not-yet-reviewed merges, oldest first: the review queue. */
  mergeQueue(): MergeQueueEntry[] {
    const hostByMember = new Map<string, UniqueCode>();
    for (const code of this.uniqueCodes) {
      for (const member of code.members) hostByMember.set(member, code);
    }
    return this.decisions
      .filter((d) => d.verdict && d.review === null)
      .map((decision) => ({
        decision,
        incoming: this.initialCodes.get(decision.target) ?? null,
        host: hostByMember.get(decision.target) ?? null,
      }));
  }

  verdictFor(codeRef: string, quote: string): Verdict | null {
    if (!this.audit) return null;
    const record = this.audit.records.find(
      (r) => r.code_ref === codeRef && r.quote === quote,
    );
    return record ? record.verdict : null;
  }
}
