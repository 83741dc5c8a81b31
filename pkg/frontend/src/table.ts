/**
 * Interactive compliance table: sortable headers, filter controls,
 * tinted cells, and persistent row multi-selection.
 *
 * Cell text is always the exact string the API sent. Tinting comes from
 * the server's per-cell bin index; provisional cells get a marker class
 * whose asterisk is drawn in CSS so the text content stays verbatim.
 */

import type { TablePayload } from "./api.js";
import { tintClass } from "./colors.js";
import { rowKey, type FilterState, type KindState } from "./state.js";

export interface TableViewOptions {
  kind: string;
  payload: TablePayload;
  state: KindState;
  onSortToggle: (column: string) => void;
  onFilterChange: (filter: FilterState) => void;
  onRowToggle: (key: string) => void;
}

function isDateName(name: string): boolean {
  return name.length === 10 && name[4] === "-" && name[7] === "-";
}

function filterBar(opts: TableViewOptions): HTMLElement {
  const bar = document.createElement("div");
  bar.className = "filter-bar";
  const current = opts.state.filter;

  const group = document.createElement("select");
  group.className = "filter-group";
  group.setAttribute("aria-label", "funding group");
  for (const [value, label] of [
    ["", "All groups"],
    ["A", "Group A"],
    ["B", "Group B"],
  ]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = label;
    group.append(option);
  }
  group.value = current.group;

  const team = document.createElement("input");
  team.className = "filter-team";
  team.placeholder = "Team ID";
  team.setAttribute("aria-label", "team filter");
  team.value = current.team;

  const search = document.createElement("input");
  search.className = "filter-q";
  search.placeholder = "Search participant or team";
  search.setAttribute("aria-label", "search");
  search.value = current.q;

  const emit = () =>
    opts.onFilterChange({
      group: group.value,
      team: team.value.trim(),
      q: search.value.trim(),
    });
  group.addEventListener("change", emit);
  team.addEventListener("change", emit);
  search.addEventListener("change", emit);

  bar.append(group, team, search);
  return bar;
}

function headerRow(opts: TableViewOptions): HTMLTableRowElement {
  const tr = document.createElement("tr");
  const sort = opts.state.sort;
  for (const column of opts.payload.columns) {
    const th = document.createElement("th");
    th.dataset.column = column.name;
    th.textContent = column.name;
    if (sort.column === column.name) {
      const mark = document.createElement("span");
      mark.className = "sort-mark";
      mark.textContent = sort.dir === "desc" ? " ▼" : " ▲";
      th.append(mark);
    }
    th.addEventListener("click", () => opts.onSortToggle(column.name));
    tr.append(th);
  }
  return tr;
}

function bodyRows(opts: TableViewOptions): HTMLTableSectionElement {
  const tbody = document.createElement("tbody");
  const columns = opts.payload.columns;
  const provisionalIndex = columns.findIndex(
    (c) => c.name === "provisional_from",
  );
  for (const row of opts.payload.rows) {
    const key = rowKey(columns, row);
    const tr = document.createElement("tr");
    tr.dataset.key = key;
    if (opts.state.selected.has(key)) tr.classList.add("selected");
    tr.addEventListener("click", () => opts.onRowToggle(key));
    const provisionalFrom =
      provisionalIndex >= 0 ? row.cells[provisionalIndex] : "";
    for (let i = 0; i < columns.length; i++) {
      const td = document.createElement("td");
      td.textContent = row.cells[i];
      const bin = row.bins[i];
      if (bin !== null && bin !== undefined) {
        td.classList.add(tintClass(opts.kind, bin));
      }
      if (
        provisionalFrom !== "" &&
        isDateName(columns[i].name) &&
        columns[i].name >= provisionalFrom
      ) {
        td.classList.add("provisional");
      }
      tr.append(td);
    }
    tbody.append(tr);
  }
  return tbody;
}

/** Render the table and its filter bar into `root`, replacing both. */
export function renderTable(root: HTMLElement, opts: TableViewOptions): void {
  let errorSlot = root.querySelector<HTMLElement>(".error-slot");
  root.replaceChildren();
  errorSlot = document.createElement("div");
  errorSlot.className = "error-slot";
  root.append(errorSlot, filterBar(opts));

  const table = document.createElement("table");
  table.className = "data-table";
  table.dataset.kind = opts.kind;
  const thead = document.createElement("thead");
  thead.append(headerRow(opts));
  table.append(thead, bodyRows(opts));

  const scroll = document.createElement("div");
  scroll.className = "table-scroll";
  scroll.append(table);
  root.append(scroll);

  const count = document.createElement("p");
  count.className = "row-count";
  count.textContent = `${opts.payload.row_count} rows`;
  root.append(count);
}

/**
 * Show a non-blocking error banner above whatever is already rendered;
 * a stale table stays visible and usable while retrying.
 */
export function renderTableError(
  root: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  let slot = root.querySelector<HTMLElement>(".error-slot");
  if (slot === null) {
    slot = document.createElement("div");
    slot.className = "error-slot";
    root.prepend(slot);
  }
  slot.replaceChildren();
  const banner = document.createElement("div");
  banner.className = "error-banner";
  const text = document.createElement("span");
  text.textContent = message;
  const retry = document.createElement("button");
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  banner.append(text, retry);
  slot.append(banner);
}
