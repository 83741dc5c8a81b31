/**
 * Dashboard assembly: context views on top, the table switcher and the
 * active compliance table below. Below the compact breakpoint only the
 * context views stay mounted.
 */

import { LatestWins, type DataSource, type TablePayload } from "./api.js";
import { renderContext, renderContextError } from "./context.js";
import {
  TABLE_KINDS,
  TABLE_LABELS,
  ViewState,
  type TableKindName,
} from "./state.js";
import { renderTable, renderTableError } from "./table.js";

export interface AppOptions {
  source: DataSource;
  state?: ViewState;
  initialWidth?: number;
}

export interface AppHandle {
  state: ViewState;
  refreshTable: () => Promise<void>;
  reloadContext: () => Promise<void>;
  setViewportWidth: (px: number) => void;
  whenIdle: () => Promise<void>;
}

function errorMessage(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

export function mountApp(root: HTMLElement, opts: AppOptions): AppHandle {
  const source = opts.source;
  const state = opts.state ?? new ViewState();
  if (opts.initialWidth !== undefined) state.setViewportWidth(opts.initialWidth);

  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "Compliance Monitor";
  const stamp = document.createElement("span");
  stamp.className = "generated-at";
  header.append(title, stamp);

  const contextSection = document.createElement("section");
  contextSection.className = "context-views";
  const tablesSection = document.createElement("section");
  tablesSection.className = "table-views";

  root.replaceChildren(header, contextSection, tablesSection);

  const payloads = new Map<TableKindName, TablePayload>();
  const latest = new LatestWins<TablePayload>();
  let pending: Promise<void> = Promise.resolve();
  let tableView: HTMLElement | null = null;

  function buildTablesSection(): HTMLElement {
    tablesSection.replaceChildren();
    const nav = document.createElement("nav");
    nav.className = "switcher";
    for (const kind of TABLE_KINDS) {
      const button = document.createElement("button");
      button.dataset.kind = kind;
      button.textContent = TABLE_LABELS[kind];
      if (kind === state.activeKind) button.classList.add("active");
      button.addEventListener("click", () => {
        state.activeKind = kind;
        for (const sibling of nav.querySelectorAll("button")) {
          sibling.classList.toggle("active", sibling === button);
        }
        pending = refreshTable();
      });
      nav.append(button);
    }
    const view = document.createElement("div");
    view.className = "table-view";
    tablesSection.append(nav, view);
    return view;
  }

  function renderActiveTable(payload: TablePayload): void {
    if (tableView === null) return;
    const kind = state.activeKind;
    renderTable(tableView, {
      kind,
      payload,
      state: state.stateFor(kind),
      onSortToggle: (column) => {
        state.toggleSort(column);
        pending = refreshTable();
      },
      onFilterChange: (filter) => {
        state.setFilter(filter);
        pending = refreshTable();
      },
      onRowToggle: (key) => {
        state.toggleSelection(key);
        const cached = payloads.get(kind);
        if (cached !== undefined) renderActiveTable(cached);
      },
    });
  }

  async function refreshTable(): Promise<void> {
    if (state.viewport === "compact" || tableView === null) return;
    const kind = state.activeKind;
    const { filter, sort } = state.stateFor(kind);
    try {
      const payload = await latest.run(() =>
        source.fetchTable(kind, {
          group: filter.group,
          team: filter.team,
          q: filter.q,
          sort: sort.column ?? undefined,
          dir: sort.column !== null ? sort.dir : undefined,
        }),
      );
      if (payload === null) return;
      payloads.set(kind, payload);
      stamp.textContent = `data as of ${payload.generated_at}`;
      renderActiveTable(payload);
    } catch (err) {
      if (tableView !== null) {
        renderTableError(tableView, errorMessage(err), () => {
          pending = refreshTable();
        });
      }
    }
  }

  async function reloadContext(): Promise<void> {
    try {
      const [overview, timeline] = await Promise.all([
        source.fetchOverview(),
        source.fetchTimeline(),
      ]);
      renderContext(contextSection, { overview, timeline });
    } catch (err) {
      renderContextError(contextSection, errorMessage(err), () => {
        pending = reloadContext();
      });
    }
  }

  function applyViewport(): void {
    if (state.viewport === "compact") {
      tablesSection.replaceChildren();
      tablesSection.hidden = true;
      tableView = null;
      return;
    }
    tablesSection.hidden = false;
    tableView = buildTablesSection();
    const cached = payloads.get(state.activeKind);
    if (cached !== undefined) renderActiveTable(cached);
    pending = refreshTable();
  }

  function setViewportWidth(px: number): void {
    const before = state.viewport;
    state.setViewportWidth(px);
    if (state.viewport !== before) applyViewport();
  }

  applyViewport();
  const contextLoad = reloadContext();

  return {
    state,
    refreshTable: () => {
      pending = refreshTable();
      return pending;
    },
    reloadContext,
    setViewportWidth,
    whenIdle: async () => {
      await contextLoad;
      await pending;
    },
  };
}
