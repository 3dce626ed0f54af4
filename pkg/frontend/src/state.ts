/** View state and its pure transitions.  Everything here is derived from
 * service responses, so a reload can rebuild the same view from the session
 * id alone. */
import type {
  Cell,
  OccurrenceInfo,
  PlanPayload,
  ProvenancePayload,
  ResultPayload,
  SessionPayload,
} from "./api.js";

export const PAGE_SIZE = 25;

export interface PanelState {
  occurrence: OccurrenceInfo;
  nested: boolean; // opened by drilling into a view panel
  loading: boolean;
  error: string | null;
  data: ProvenancePayload | null;
}

export interface SessionView {
  id: string;
  dataset: string;
  strategy: string;
  result: ResultPayload;
  occurrences: OccurrenceInfo[];
  plan: PlanPayload | null;
  selected: number[]; // row indices into result.rows, kept sorted
  page: number;
  panels: PanelState[]; // insertion order = display order
}

export interface AppState {
  banner: string | null;
  sessions: SessionView[];
}

export function newAppState(): AppState {
  return { banner: null, sessions: [] };
}

export function sessionFromPayload(dataset: string, payload: SessionPayload): SessionView {
  const selected: number[] = [];
  for (const row of payload.selection ?? []) {
    const idx = payload.result.rows.findIndex((r) => sameRow(r, row));
    if (idx >= 0) selected.push(idx);
  }
  return {
    id: payload.session,
    dataset,
    strategy: payload.strategy,
    result: payload.result,
    occurrences: payload.occurrences,
    plan: payload.plan,
    selected: selected.sort((a, b) => a - b),
    page: 0,
    panels: [],
  };
}

export function sameRow(a: Cell[], b: Cell[]): boolean {
  return a.length === b.length && a.every((v, i) => String(v) === String(b[i]));
}

export function toggleRow(view: SessionView, index: number): SessionView {
  const selected = view.selected.includes(index)
    ? view.selected.filter((i) => i !== index)
    : [...view.selected, index].sort((a, b) => a - b);
  return { ...view, selected };
}

export function selectedRows(view: SessionView): Cell[][] {
  return view.selected.map((i) => view.result.rows[i]);
}

export function pageCount(view: SessionView): number {
  return Math.max(1, Math.ceil(view.result.rows.length / PAGE_SIZE));
}

export function visibleRows(view: SessionView): { index: number; row: Cell[] }[] {
  const start = view.page * PAGE_SIZE;
  return view.result.rows
    .slice(start, start + PAGE_SIZE)
    .map((row, i) => ({ index: start + i, row }));
}

export function setPage(view: SessionView, page: number): SessionView {
  const clamped = Math.min(Math.max(page, 0), pageCount(view) - 1);
  return { ...view, page: clamped };
}

export function findPanel(view: SessionView, path: string): PanelState | undefined {
  return view.panels.find((p) => p.occurrence.path === path);
}

export function upsertPanel(view: SessionView, panel: PanelState): SessionView {
  const panels = view.panels.some((p) => p.occurrence.path === panel.occurrence.path)
    ? view.panels.map((p) => (p.occurrence.path === panel.occurrence.path ? panel : p))
    : [...view.panels, panel];
  return { ...view, panels };
}

export function removePanel(view: SessionView, path: string): SessionView {
  return { ...view, panels: view.panels.filter((p) => p.occurrence.path !== path) };
}

/** Drilling into a view's panel opens the occurrences of its defining rule. */
export function drillTargets(view: SessionView, path: string): OccurrenceInfo[] {
  const panel = findPanel(view, path);
  if (!panel || !panel.occurrence.is_view) return [];
  return view.occurrences.filter((o) => o.rule === panel.occurrence.relation);
}

export function canDrill(panel: PanelState): boolean {
  return panel.occurrence.is_view && (panel.data?.rows.length ?? 0) > 0;
}

export function replaceSession(state: AppState, view: SessionView): AppState {
  const sessions = state.sessions.some((s) => s.id === view.id)
    ? state.sessions.map((s) => (s.id === view.id ? view : s))
    : [...state.sessions, view];
  return { ...state, sessions };
}

export function hashFor(state: AppState): string {
  if (!state.sessions.length) return "";
  const parts = state.sessions.map((s) => {
    const panels = s.panels.map((p) => encodeURIComponent(p.occurrence.path)).join("|");
    return `${s.id}:${panels}`;
  });
  return `#s=${parts.join(";")}`;
}

export function parseHash(hash: string): { id: string; panels: string[] }[] {
  const match = /#s=(.+)/.exec(hash);
  if (!match) return [];
  return match[1]
    .split(";")
    .filter(Boolean)
    .map((part) => {
      const [id, panelPart] = part.split(":");
      const panels = (panelPart ?? "")
        .split("|")
        .filter(Boolean)
        .map(decodeURIComponent);
      return { id, panels };
    });
}
