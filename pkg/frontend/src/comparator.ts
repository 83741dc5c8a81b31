/**
 * Client-side row ordering, kept behaviorally identical to the server:
 * rows pre-sorted by participant_id so the stable main sort leaves ties
 * in ID order for either direction, and empty cells always sort last.
 */

import type { Column, TableRow } from "./api.js";

export type Direction = "asc" | "desc";

function columnIndex(columns: Column[], name: string): number {
  const index = columns.findIndex((column) => column.name === name);
  if (index < 0) throw new Error(`unknown column: ${name}`);
  return index;
}

// Code-unit comparison; locale-aware collation would diverge from the server.
function compareText(a: string, b: string): number {
  if (a < b) return -1;
  if (a > b) return 1;
  return 0;
}

export function sortRows(
  columns: Column[],
  rows: TableRow[],
  sort: string | null,
  direction: Direction,
): TableRow[] {
  const pidIndex = columnIndex(columns, "participant_id");
  const ordered = [...rows].sort((a, b) =>
    compareText(a.cells[pidIndex], b.cells[pidIndex]),
  );
  if (sort === null) return ordered;

  const index = columnIndex(columns, sort);
  const filled = ordered.filter((row) => row.cells[index] !== "");
  const empty = ordered.filter((row) => row.cells[index] === "");
  const numeric = columns[index].type === "number";
  const flip = direction === "desc" ? -1 : 1;
  filled.sort((a, b) => {
    const left = a.cells[index];
    const right = b.cells[index];
    const order = numeric
      ? Number(left) - Number(right)
      : compareText(left, right);
    return flip * order;
  });
  return filled.concat(empty);
}
