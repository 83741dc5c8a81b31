/** Frozen API payloads captured from the real server; see scripts/. */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import type {
  OverviewPayload,
  TablePayload,
  TimelinePayload,
} from "../src/api.js";

export interface TableFixture {
  kind: string;
  query: Record<string, string>;
  payload: TablePayload;
}

interface FixtureFile {
  as_of: string;
  tables: TableFixture[];
  timeline: TimelinePayload;
  overview: OverviewPayload;
}

const raw = readFileSync(
  resolve(process.cwd(), "tests", "fixtures", "payloads.json"),
  "utf8",
);

export const fixtures: FixtureFile = JSON.parse(raw);

export function tableFixture(
  kind: string,
  query: Record<string, string> = {},
): TableFixture {
  const want = JSON.stringify(query, Object.keys(query).sort());
  const match = fixtures.tables.find(
    (t) =>
      t.kind === kind &&
      JSON.stringify(t.query, Object.keys(t.query).sort()) === want,
  );
  if (match === undefined) {
    throw new Error(`no fixture for ${kind} ${JSON.stringify(query)}`);
  }
  return match;
}

/** Deterministic shuffle so client-side sorting has real work to do. */
export function shuffled<T>(items: T[], seed: number): T[] {
  const out = [...items];
  let state = seed >>> 0;
  for (let i = out.length - 1; i > 0; i--) {
    state = (state * 1664525 + 1013904223) >>> 0;
    const j = state % (i + 1);
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}
