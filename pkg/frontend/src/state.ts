/**
 * Dashboard view state. Everything the user has dialed in (active
 * table, filters, sort, selected rows) lives here so that switching
 * tables or re-querying never loses it.
 */

import type { Column, TableRow } from "./api.js";
import type { Direction } from "./comparator.js";

export const TABLE_KINDS = [
  "wearable_summary",
  "wearable_recent_week",
  "wearable_all_previous",
  "survey_summary",
  "survey_recent_week",
  "survey_all_previous",
  "beacon_last_sighted",
] as const;

export type TableKindName = (typeof TABLE_KINDS)[number];

export const TABLE_LABELS: Record<TableKindName, string> = {
  wearable_summary: "Wearable Summary",
  wearable_recent_week: "Wearable Recent Week",
  wearable_all_previous: "Wearable All Previous",
  survey_summary: "Survey Summary",
  survey_recent_week: "Survey Recent Week",
  survey_all_previous: "Survey All Previous",
  beacon_last_sighted: "Beacon Last Sighted",
};

export const DEFAULT_KIND: TableKindName = "wearable_recent_week";

/** Below this width only the context views are shown. */
export const COMPACT_BREAKPOINT = 740;

export type ViewportClass = "full" | "compact";

export interface FilterState {
  group: string;
  team: string;
  q: string;
}

export interface SortState {
  column: string | null;
  dir: Direction;
}

export interface KindState {
  filter: FilterState;
  sort: SortState;
  selected: Set<string>;
}

function freshKindState(): KindState {
  return {
    filter: { group: "", team: "", q: "" },
    sort: { column: null, dir: "desc" },
    selected: new Set(),
  };
}

/**
 * Selection key for a row: participant plus date where the table has
 * one row per participant-day, participant alone otherwise. Keys, not
 * row indices, so selection survives any re-sort or re-filter.
 */
export function rowKey(columns: Column[], row: TableRow): string {
  const pidIndex = columns.findIndex((c) => c.name === "participant_id");
  const dateIndex = columns.findIndex((c) => c.name === "date");
  const pid = row.cells[pidIndex];
  return dateIndex >= 0 ? `${pid}|${row.cells[dateIndex]}` : pid;
}

export class ViewState {
  activeKind: TableKindName = DEFAULT_KIND;
  viewport: ViewportClass = "full";
  private readonly perKind = new Map<TableKindName, KindState>();

  stateFor(kind: TableKindName = this.activeKind): KindState {
    let state = this.perKind.get(kind);
    if (state === undefined) {
      state = freshKindState();
      this.perKind.set(kind, state);
    }
    return state;
  }

  /** First click on a column sorts descending, the next click flips. */
  toggleSort(column: string): void {
    const sort = this.stateFor().sort;
    if (sort.column === column) {
      sort.dir = sort.dir === "desc" ? "asc" : "desc";
    } else {
      sort.column = column;
      sort.dir = "desc";
    }
  }

  setFilter(filter: FilterState): void {
    this.stateFor().filter = { ...filter };
  }

  toggleSelection(key: string): void {
    const selected = this.stateFor().selected;
    if (selected.has(key)) {
      selected.delete(key);
    } else {
      selected.add(key);
    }
  }

  setViewportWidth(px: number): void {
    this.viewport = px < COMPACT_BREAKPOINT ? "compact" : "full";
  }
}
