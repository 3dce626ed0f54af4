/** Pure HTML builders.  The controller re-renders whole regions from state;
 * nothing in here touches the DOM, which keeps every view testable as text. */
import type { Cell, DatasetInfo, PlanPayload } from "./api.js";
import {
  AppState,
  PanelState,
  SessionView,
  canDrill,
  pageCount,
  visibleRows,
} from "./state.js";

export function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function bannerHtml(state: AppState): string {
  if (!state.banner) return "";
  return `<div class="banner" role="alert">${esc(state.banner)}</div>`;
}

export function launcherHtml(datasets: DatasetInfo[], selectedId?: string): string {
  const options = datasets
    .map((d) => {
      const sel = d.id === selectedId ? " selected" : "";
      return `<option value="${esc(d.id)}"${sel}>${esc(d.id)}</option>`;
    })
    .join("");
  const strategies = ["O1", "W", "G", "O2"]
    .map((s) => `<option value="${s}"${s === "O2" ? " selected" : ""}>${s}</option>`)
    .join("");
  return `
  <form id="launcher">
    <label>dataset <select name="dataset">${options}</select></label>
    <label>strategy <select name="strategy">${strategies}</select></label>
    <label>plan <select name="plan_mode">
      <option value="auto" selected>auto</option>
      <option value="none">none</option>
    </select></label>
    <label class="program">program
      <textarea name="program" rows="4" spellcheck="false"></textarea>
    </label>
    <button type="submit">new session</button>
  </form>`;
}

function cellHtml(value: Cell): string {
  return `<td>${esc(value)}</td>`;
}

export function resultsGridHtml(view: SessionView): string {
  const { result } = view;
  if (!result.rows.length) {
    return `<p class="empty">The query returned no rows.</p>`;
  }
  const head = result.columns.map((c) => `<th>${esc(c)}</th>`).join("");
  const body = visibleRows(view)
    .map(({ index, row }) => {
      const checked = view.selected.includes(index) ? " checked" : "";
      const cells = row.map(cellHtml).join("");
      return `<tr data-row="${index}">
        <td><input type="checkbox" data-toggle-row="${index}"${checked}></td>${cells}</tr>`;
    })
    .join("");
  return `<table class="grid">
    <thead><tr><th></th>${head}</tr></thead>
    <tbody>${body}</tbody>
  </table>${paginatorHtml(view)}`;
}

export function paginatorHtml(view: SessionView): string {
  const pages = pageCount(view);
  if (pages <= 1) return "";
  const buttons = Array.from({ length: pages }, (_, i) => {
    const current = i === view.page ? " current" : "";
    return `<button data-page="${i}" class="page${current}">${i + 1}</button>`;
  }).join("");
  return `<nav class="paginator">${buttons}</nav>`;
}

export function occurrencePickerHtml(view: SessionView): string {
  const items = view.occurrences
    .map((o) => {
      const open = view.panels.some((p) => p.occurrence.path === o.path);
      const label = o.alias === o.relation ? o.relation : `${o.relation}@${o.alias}`;
      const covered = o.key_covered ? ` <span class="badge covered">key in RK</span>` : "";
      return `<li>
        <button data-open-panel="${esc(o.path)}" ${open ? "disabled" : ""}>
          ${esc(label)}</button>
        <span class="meta">${o.is_view ? "view" : "table"} in ${esc(o.rule)}, depth ${o.depth}</span>${covered}
      </li>`;
    })
    .join("");
  return `<ul class="occurrences">${items}</ul>`;
}

export function statsBadgesHtml(panel: PanelState): string {
  const data = panel.data;
  if (!data) return "";
  const s = data.stats;
  const badges = [
    `<span class="badge strategy">${esc(s.strategy)}</span>`,
    `<span class="badge">joins ${s.join_count}</span>`,
    `<span class="badge">chain ${s.chain_join_count}</span>`,
    `<span class="badge">${s.elapsed_us} µs</span>`,
  ];
  if (s.case !== null && s.case !== undefined) {
    badges.push(`<span class="badge case">case ${s.case}</span>`);
  }
  return badges.join(" ");
}

export function panelHtml(panel: PanelState): string {
  const occ = panel.occurrence;
  const title = occ.alias === occ.relation ? occ.relation : `${occ.relation}@${occ.alias}`;
  let body: string;
  if (panel.loading) {
    body = `<p class="loading">computing…</p>`;
  } else if (panel.error) {
    body = `<p class="error">${esc(panel.error)}</p>`;
  } else if (!panel.data) {
    body = `<p class="hint">select result rows to see provenance</p>`;
  } else if (!panel.data.rows.length) {
    body = `<p class="hint">no contributing rows for the current selection</p>`;
  } else {
    const head = panel.data.columns.map((c) => `<th>${esc(c)}</th>`).join("");
    const rows = panel.data.rows
      .map((r) => `<tr>${r.map(cellHtml).join("")}</tr>`)
      .join("");
    body = `<table class="grid"><thead><tr>${head}</tr></thead><tbody>${rows}</tbody></table>`;
  }
  const drill = occ.is_view
    ? `<button data-drill="${esc(occ.path)}" ${canDrill(panel) ? "" : "disabled"}>drill into ${esc(occ.relation)}</button>`
    : "";
  return `<section class="panel${panel.nested ? " nested" : ""}" data-panel="${esc(occ.path)}">
    <header>
      <h3>provenance of ${esc(title)} <small>${esc(occ.path)}</small></h3>
      ${statsBadgesHtml(panel)}
      ${drill}
      <button data-close-panel="${esc(occ.path)}">close</button>
    </header>
    ${body}
  </section>`;
}

export function planInspectorHtml(plan: PlanPayload | null): string {
  if (!plan) return "";
  const chosen = plan.chosen.length
    ? plan.chosen.map((c) => `<code>${esc(c)}</code>`).join(", ")
    : "none (plain result)";
  const stats = plan.stats
    ? `<dl>
        <dt>rows</dt><dd>${plan.stats.rows_rk} vs result ${plan.stats.rows_r}</dd>
        <dt>joins</dt><dd>${plan.stats.joins_with} with, ${plan.stats.joins_without} without</dd>
        <dt>benefit / cost</dt><dd>${plan.stats.benefit.toFixed(3)} / ${plan.stats.cost.toFixed(3)}</dd>
      </dl>`
    : "";
  return `<details class="plan"><summary>materialization plan</summary>
    <p>keys kept for: ${chosen}</p>
    <p>RK columns: ${plan.rk_columns.map(esc).join(", ")}</p>
    <pre>${esc([...plan.vk_rules, plan.rk_rule, plan.oq_rule].join("\n"))}</pre>
    ${stats}
  </details>`;
}

export function sessionHtml(view: SessionView): string {
  const panels = view.panels.map(panelHtml).join("");
  return `<article class="session" data-session="${esc(view.id)}">
    <header>
      <h2>${esc(view.result.relation)} <span class="badge strategy">${esc(view.strategy)}</span>
        <small>${esc(view.dataset)} · ${esc(view.id)}</small></h2>
      <span class="meta">${view.result.rows.length} rows, ${view.selected.length} selected</span>
    </header>
    ${planInspectorHtml(view.plan)}
    ${resultsGridHtml(view)}
    <h3>explore an occurrence</h3>
    ${occurrencePickerHtml(view)}
    <div class="panels">${panels}</div>
  </article>`;
}

export function appHtml(state: AppState): string {
  return bannerHtml(state) + state.sessions.map(sessionHtml).join("");
}
