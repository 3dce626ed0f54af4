/** Page glue: render regions from controller state, delegate events back. */
import { ApiClient } from "./api.js";
import { ExplorerApp } from "./app.js";
import { appHtml, launcherHtml } from "./render.js";

const api = new ApiClient("..");
const root = document.getElementById("sessions")!;
const launcher = document.getElementById("launcher-slot")!;

const app = new ExplorerApp(api, () => {
  root.innerHTML = appHtml(app.state);
  const hash = app.hash();
  if (hash && window.location.hash !== hash) {
    history.replaceState(null, "", hash || "#");
  }
});

function renderLauncher(): void {
  launcher.innerHTML = launcherHtml(app.datasets);
  const form = document.getElementById("launcher") as HTMLFormElement;
  const datasetSelect = form.elements.namedItem("dataset") as HTMLSelectElement;
  const programArea = form.elements.namedItem("program") as HTMLTextAreaElement;
  const fillProgram = () => {
    programArea.value = app.suggestedProgram(datasetSelect.value);
  };
  fillProgram();
  datasetSelect.addEventListener("change", fillProgram);
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const strategy = (form.elements.namedItem("strategy") as HTMLSelectElement).value;
    const planMode = (form.elements.namedItem("plan_mode") as HTMLSelectElement).value;
    try {
      await app.newSession(datasetSelect.value, programArea.value, strategy, planMode);
      app.setBanner(null);
    } catch (err) {
      app.setBanner(app.describeError(err));
    }
  });
}

root.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  const session = target.closest<HTMLElement>("[data-session]")?.dataset.session;
  if (!session) return;
  const toggle = target.dataset.toggleRow;
  if (toggle !== undefined) {
    app.toggleRow(session, Number(toggle));
    return;
  }
  if (target.dataset.page !== undefined) {
    app.setPage(session, Number(target.dataset.page));
  } else if (target.dataset.openPanel) {
    void app.openPanel(session, target.dataset.openPanel);
  } else if (target.dataset.closePanel) {
    app.closePanel(session, target.dataset.closePanel);
  } else if (target.dataset.drill) {
    void app.drill(session, target.dataset.drill);
  }
});

void app.init(window.location.hash).then(renderLauncher);
