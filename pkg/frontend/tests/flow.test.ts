/** The full exploration flow against the fake service: create a hybrid
 * session with an automatic plan, select the worked-example row, open every
 * occurrence panel, check the values, then drill into the view's panel. */
import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { ExplorerApp } from "../src/app.js";
import { appHtml } from "../src/render.js";
import { findPanel } from "../src/state.js";
import { FakeApi, PANELS, WORKED_ROW } from "./fixtures.js";

function makeApp(api: FakeApi): ExplorerApp {
  return new ExplorerApp(api, () => {}, 0);
}

describe("exploration flow", () => {
  it("runs the worked example end to end", async () => {
    const api = new FakeApi();
    const app = makeApp(api);
    await app.init("");
    const session = await app.newSession(
      "q18-mini",
      app.suggestedProgram("q18-mini"),
      "O2",
      "auto",
    );
    expect(session.plan?.chosen).toEqual(["Q18_tmp.2"]);
    expect(session.result.rows).toEqual([WORKED_ROW]);

    app.toggleRow(session.id, 0);
    await app.pushSelection(session.id);
    expect(api.selection).toEqual([WORKED_ROW]);

    const expectations: Record<string, unknown[][]> = {
      "R.Customers": [["c1", "n1", "a1"]],
      "R.Orders": [["o1", "c1", "d1"]],
      "R.Lineitem": [["o1", "l1", 200], ["o1", "l2", 150]],
      "R.Q18_tmp": [["o1", 350]],
      "Q18_tmp.2": [["o1", "l1", 200], ["o1", "l2", 150]],
    };
    for (const path of Object.keys(expectations)) {
      await app.openPanel(session.id, path);
    }
    const current = app.state.sessions[0];
    for (const [path, rows] of Object.entries(expectations)) {
      const panel = findPanel(current, path);
      expect(panel?.data?.rows, path).toEqual(rows);
    }

    // drilling the view panel opens the inner line-item panel, nested
    app.closePanel(session.id, "Q18_tmp.2");
    await app.drill(session.id, "R.Q18_tmp");
    const drilled = findPanel(app.state.sessions[0], "Q18_tmp.2");
    expect(drilled?.nested).toBe(true);
    expect(drilled?.data?.rows).toHaveLength(2);
    expect(drilled?.data?.stats.join_count).toBe(1);

    const html = appHtml(app.state);
    expect(html).toContain("a1");
    expect(html).toContain("350");
    expect(html).toContain("case 1");
  });

  it("deselecting everything empties the panels with a hint", async () => {
    const api = new FakeApi();
    const app = makeApp(api);
    await app.init("");
    const session = await app.newSession("q18-mini", "", "O2");
    app.toggleRow(session.id, 0);
    await app.pushSelection(session.id);
    await app.openPanel(session.id, "R.Customers");
    expect(findPanel(app.state.sessions[0], "R.Customers")?.data?.rows).toHaveLength(1);

    app.toggleRow(session.id, 0); // deselect
    await app.pushSelection(session.id);
    const panel = findPanel(app.state.sessions[0], "R.Customers");
    expect(panel?.data).toBeNull();
    expect(appHtml(app.state)).toContain("select result rows");
  });

  it("selection posts are debounced into one request", async () => {
    const api = new FakeApi();
    const app = new ExplorerApp(api, () => {}, 5);
    await app.init("");
    const session = await app.newSession("q18-mini", "", "O1");
    app.toggleRow(session.id, 0);
    app.toggleRow(session.id, 0);
    app.toggleRow(session.id, 0);
    await new Promise((r) => setTimeout(r, 30));
    const posts = api.calls.filter((c) => c.startsWith("setSelection"));
    expect(posts).toHaveLength(1);
    expect(api.selection).toEqual([WORKED_ROW]);
  });

  it("a reload reconstructs the same panels from the session id", async () => {
    const api = new FakeApi();
    const first = makeApp(api);
    await first.init("");
    const session = await first.newSession("q18-mini", "", "O2");
    first.toggleRow(session.id, 0);
    await first.pushSelection(session.id);
    await first.openPanel(session.id, "R.Customers");
    await first.openPanel(session.id, "R.Q18_tmp");
    const hash = first.hash();
    expect(hash).toContain(session.id);

    const second = makeApp(api); // same backend, fresh page
    await second.init(hash);
    const restored = second.state.sessions[0];
    expect(restored.id).toBe(session.id);
    expect(restored.selected).toEqual([0]);
    expect(restored.panels.map((p) => p.occurrence.path)).toEqual([
      "R.Customers",
      "R.Q18_tmp",
    ]);
    expect(findPanel(restored, "R.Customers")?.data?.rows).toEqual(
      PANELS["R.Customers"].rows,
    );
  });

  it("surfaces service rejections in the banner", async () => {
    const api = new FakeApi();
    const app = makeApp(api);
    await app.init("");
    const session = await app.newSession("q18-mini", "", "O1");
    app.toggleRow(session.id, 0);
    api.failNext = new ApiError(422, "row_not_in_result", "selection must be a subset");
    await app.pushSelection(session.id);
    expect(app.state.banner).toContain("row_not_in_result");
  });

  it("an unreachable service sets the banner at startup", async () => {
    const api = new FakeApi();
    api.failNext = new ApiError(0, "unreachable", "service unreachable: refused");
    const app = makeApp(api);
    await app.init("");
    expect(app.state.banner).toContain("unreachable");
  });
});
