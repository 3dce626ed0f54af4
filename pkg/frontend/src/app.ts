/** Controller: orchestrates API calls and state transitions.  DOM-free so the
 * whole exploration flow is unit-testable; main.ts binds it to the page. */
import { Api, ApiError, DatasetInfo } from "./api.js";
import {
  AppState,
  SessionView,
  drillTargets,
  findPanel,
  hashFor,
  newAppState,
  parseHash,
  removePanel,
  replaceSession,
  selectedRows,
  sessionFromPayload,
  setPage,
  toggleRow,
  upsertPanel,
} from "./state.js";

export class ExplorerApp {
  state: AppState = newAppState();
  datasets: DatasetInfo[] = [];
  private queues = new Map<string, Promise<void>>();
  private timers = new Map<string, ReturnType<typeof setTimeout>>();

  constructor(
    private api: Api,
    private onChange: () => void = () => {},
    private debounceMs = 150,
  ) {}

  private emit(): void {
    this.onChange();
  }

  private session(id: string): SessionView {
    const view = this.state.sessions.find((s) => s.id === id);
    if (!view) throw new Error(`no session ${id} in view state`);
    return view;
  }

  private update(view: SessionView): void {
    this.state = replaceSession(this.state, view);
    this.emit();
  }

  setBanner(message: string | null): void {
    this.state = { ...this.state, banner: message };
    this.emit();
  }

  async init(hash: string = ""): Promise<void> {
    try {
      const { datasets } = await this.api.listDatasets();
      this.datasets = datasets;
      this.setBanner(null);
    } catch (err) {
      this.setBanner(this.describeError(err));
      return;
    }
    for (const entry of parseHash(hash)) {
      await this.restoreSession(entry.id, entry.panels);
    }
  }

  /** A reload rebuilds the identical view from session ids alone. */
  async restoreSession(id: string, panels: string[]): Promise<void> {
    try {
      const payload = await this.api.describeSession(id);
      const view = sessionFromPayload("(restored)", { ...payload, session: id });
      this.update(view);
      for (const path of panels) {
        await this.openPanel(id, path, false);
      }
    } catch (err) {
      this.setBanner(this.describeError(err));
    }
  }

  async newSession(
    dataset: string,
    program: string,
    strategy: string,
    planMode: string | string[] = "auto",
  ): Promise<SessionView> {
    const payload = await this.api.createSession(dataset, program, strategy, planMode);
    const view = sessionFromPayload(dataset, payload);
    this.update(view);
    return view;
  }

  suggestedProgram(dataset: string): string {
    return this.datasets.find((d) => d.id === dataset)?.suggested_program ?? "";
  }

  hash(): string {
    return hashFor(this.state);
  }

  setPage(sessionId: string, page: number): void {
    this.update(setPage(this.session(sessionId), page));
  }

  /** Toggling a row updates the grid immediately; the selection post is
   * debounced, and posts for one session are strictly ordered. */
  toggleRow(sessionId: string, rowIndex: number): void {
    this.update(toggleRow(this.session(sessionId), rowIndex));
    const pending = this.timers.get(sessionId);
    if (pending) clearTimeout(pending);
    this.timers.set(
      sessionId,
      setTimeout(() => this.pushSelection(sessionId), this.debounceMs),
    );
  }

  /** Submit the selection now (used by tests and by flush-on-demand). */
  pushSelection(sessionId: string): Promise<void> {
    const pending = this.timers.get(sessionId);
    if (pending) clearTimeout(pending);
    this.timers.delete(sessionId);
    return this.enqueue(sessionId, async () => {
      const view = this.session(sessionId);
      try {
        await this.api.setSelection(sessionId, selectedRows(view));
        this.setBanner(null);
      } catch (err) {
        this.setBanner(this.describeError(err));
        return;
      }
      await this.refreshPanels(sessionId);
    });
  }

  private enqueue(sessionId: string, task: () => Promise<void>): Promise<void> {
    const tail = this.queues.get(sessionId) ?? Promise.resolve();
    const next = tail.then(task, task);
    this.queues.set(sessionId, next);
    return next;
  }

  async openPanel(sessionId: string, path: string, nested = false): Promise<void> {
    const view = this.session(sessionId);
    const occurrence = view.occurrences.find((o) => o.path === path);
    if (!occurrence) throw new Error(`unknown occurrence ${path}`);
    if (findPanel(view, path)) return this.refreshPanel(sessionId, path);
    this.update(
      upsertPanel(view, { occurrence, nested, loading: true, error: null, data: null }),
    );
    await this.refreshPanel(sessionId, path);
  }

  closePanel(sessionId: string, path: string): void {
    this.update(removePanel(this.session(sessionId), path));
  }

  /** Open one nested panel per occurrence of the view's defining rule. */
  async drill(sessionId: string, path: string): Promise<void> {
    const targets = drillTargets(this.session(sessionId), path);
    for (const occ of targets) {
      await this.openPanel(sessionId, occ.path, true);
    }
  }

  async refreshPanels(sessionId: string): Promise<void> {
    const paths = this.session(sessionId).panels.map((p) => p.occurrence.path);
    for (const path of paths) {
      await this.refreshPanel(sessionId, path);
    }
  }

  async refreshPanel(sessionId: string, path: string): Promise<void> {
    let view = this.session(sessionId);
    const panel = findPanel(view, path);
    if (!panel) return;
    if (!view.selected.length) {
      this.update(upsertPanel(view, { ...panel, loading: false, error: null, data: null }));
      return;
    }
    this.update(upsertPanel(view, { ...panel, loading: true, error: null }));
    try {
      const data = await this.api.getProvenance(sessionId, path);
      view = this.session(sessionId);
      const current = findPanel(view, path);
      if (!current) return; // closed while in flight
      this.update(upsertPanel(view, { ...current, loading: false, error: null, data }));
    } catch (err) {
      view = this.session(sessionId);
      const current = findPanel(view, path);
      if (!current) return;
      this.update(
        upsertPanel(view, {
          ...current,
          loading: false,
          error: this.describeError(err),
          data: null,
        }),
      );
    }
  }

  describeError(err: unknown): string {
    if (err instanceof ApiError) {
      return err.status === 0 ? err.message : `${err.code}: ${err.message}`;
    }
    return String(err);
  }
}
