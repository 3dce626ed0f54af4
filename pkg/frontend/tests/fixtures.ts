/** Service payloads captured from a live session against the demo dataset;
 * the fake API in these tests replays them verbatim. */
import type {
  Api,
  Cell,
  DatasetInfo,
  ProvenancePayload,
  SessionPayload,
} from "../src/api.js";
import { ApiError } from "../src/api.js";

export const WORKED_ROW: Cell[] = ["n1", "c1", "o1", "d1", 350];

export const DATASETS: DatasetInfo[] = [
  {
    id: "q18-mini",
    relations: ["Customers", "Lineitem", "Orders"],
    suggested_program:
      "Q18_tmp(o_key, sum(qty) as t_sum_qty) :- Lineitem@2.\n" +
      "R(c_name, c_key, o_key, o_date, sum(qty) as tot_qty) :- " +
      "Customers, Orders, Lineitem, Q18_tmp, t_sum_qty > 300.\n",
  },
];

export const SESSION: SessionPayload = {
  session: "s-test",
  strategy: "O2",
  result: {
    relation: "R",
    columns: ["c_name", "c_key", "o_key", "o_date", "tot_qty"],
    rows: [WORKED_ROW],
  },
  occurrences: [
    { path: "Q18_tmp.2", alias: "2", relation: "Lineitem", rule: "Q18_tmp", depth: 1, is_view: false, key_covered: true },
    { path: "R.Customers", alias: "Customers", relation: "Customers", rule: "R", depth: 0, is_view: false, key_covered: true },
    { path: "R.Orders", alias: "Orders", relation: "Orders", rule: "R", depth: 0, is_view: false, key_covered: true },
    { path: "R.Lineitem", alias: "Lineitem", relation: "Lineitem", rule: "R", depth: 0, is_view: false, key_covered: false },
    { path: "R.Q18_tmp", alias: "Q18_tmp", relation: "Q18_tmp", rule: "R", depth: 0, is_view: true, key_covered: true },
  ],
  plan: {
    chosen: ["Q18_tmp.2"],
    rk_columns: ["c_name", "c_key", "o_key", "o_date", "tot_qty", "linenum2"],
    added_columns: ["linenum2"],
    rk_rule: "RK(c_name, c_key, o_key, o_date, tot_qty, linenum2) :- R, Q18_tmpK@Q18_tmp.",
    vk_rules: ["Q18_tmpK(o_key, t_sum_qty, linenum as linenum2) :- Q18_tmp, Lineitem@2."],
    oq_rule: "OQ(c_name, c_key, o_key, o_date, tot_qty) :- RK.",
    cases: { "Q18_tmp.2": 1, "R.Customers": 1, "R.Orders": 1, "R.Lineitem": 2 },
    stats: {
      rows_r: 1, rows_rk: 2, joins_without: 5, joins_with: 3,
      benefit: 1.5, cost: 2.0, score: "0.75",
    },
  },
  elapsed_us: 1234,
};

function prov(
  occurrence: string,
  relation: string,
  isView: boolean,
  columns: string[],
  rows: Cell[][],
  caseUsed: number | null,
): ProvenancePayload {
  return {
    occurrence,
    relation,
    is_view: isView,
    columns,
    rows,
    strategy: "O2",
    stats: {
      strategy: "O2",
      join_count: 1,
      chain_join_count: 1,
      query_count: 1,
      rows: rows.length,
      case: caseUsed,
      elapsed_us: 120,
    },
    elapsed_us: 150,
  };
}

export const PANELS: Record<string, ProvenancePayload> = {
  "R.Customers": prov("R.Customers", "Customers", false,
    ["c_key", "c_name", "c_address"], [["c1", "n1", "a1"]], 1),
  "R.Orders": prov("R.Orders", "Orders", false,
    ["o_key", "c_key", "o_date"], [["o1", "c1", "d1"]], 1),
  "R.Lineitem": prov("R.Lineitem", "Lineitem", false,
    ["o_key", "linenum", "qty"], [["o1", "l1", 200], ["o1", "l2", 150]], 2),
  "R.Q18_tmp": prov("R.Q18_tmp", "Q18_tmp", true,
    ["o_key", "t_sum_qty"], [["o1", 350]], 1),
  "Q18_tmp.2": prov("Q18_tmp.2", "Lineitem", false,
    ["o_key", "linenum", "qty"], [["o1", "l1", 200], ["o1", "l2", 150]], 1),
};

/** In-memory fake of the service contract, with call logging. */
export class FakeApi implements Api {
  calls: string[] = [];
  selection: Cell[][] = [];
  failNext: ApiError | null = null;

  private maybeFail(): void {
    if (this.failNext) {
      const err = this.failNext;
      this.failNext = null;
      throw err;
    }
  }

  async listDatasets() {
    this.calls.push("listDatasets");
    this.maybeFail();
    return { datasets: DATASETS };
  }

  async createSession(dataset: string, _program: string, strategy: string) {
    this.calls.push(`createSession:${dataset}:${strategy}`);
    this.maybeFail();
    return { ...SESSION, strategy };
  }

  async describeSession(id: string) {
    this.calls.push(`describeSession:${id}`);
    this.maybeFail();
    return { ...SESSION, session: id, selection: this.selection };
  }

  async setSelection(_id: string, rows: Cell[][]) {
    this.calls.push(`setSelection:${JSON.stringify(rows)}`);
    this.maybeFail();
    this.selection = rows;
    return { selected: rows.length };
  }

  async getProvenance(_id: string, occurrence: string) {
    this.calls.push(`getProvenance:${occurrence}`);
    this.maybeFail();
    const payload = PANELS[occurrence];
    if (!payload) {
      throw new ApiError(404, "unknown_occurrence", `no occurrence ${occurrence}`);
    }
    if (!this.selection.length) {
      throw new ApiError(409, "empty_selection", "select result rows first");
    }
    return payload;
  }

  async getPlan(_id: string) {
    this.calls.push("getPlan");
    this.maybeFail();
    return { plan: SESSION.plan };
  }
}
