/**
 * Sequential color binning, mirroring the server's bin edges.
 *
 * The server sends a bin index per cell and those indices drive the
 * actual tinting; the functions here exist for the legend and for
 * asserting the boundary contract in tests.
 */

export const COMPLIANCE_BIN_EDGES: readonly number[] = [50, 65, 80, 90];
export const STALENESS_BIN_EDGES: readonly number[] = [1, 3, 6];
export const NEVER_SIGHTED_BIN = 4;

/** Bin index over a compliance percentage; 0 is the worst band. */
export function complianceBin(value: number): number {
  let bin = 0;
  for (const edge of COMPLIANCE_BIN_EDGES) {
    if (value >= edge) bin += 1;
  }
  return bin;
}

/** Bin index over days since last sighting; edges are band maxima. */
export function stalenessBin(daysSince: number): number {
  let bin = 0;
  for (const edge of STALENESS_BIN_EDGES) {
    if (edge < daysSince) bin += 1;
  }
  return bin;
}

/**
 * CSS class for a server-provided bin index. The beacon table uses the
 * staleness palette (darker = staler); every other table uses the
 * compliance palette (darker = less compliant).
 */
export function tintClass(tableKind: string, bin: number): string {
  const palette = tableKind === "beacon_last_sighted" ? "s" : "c";
  return `tint-${palette}${bin}`;
}

export const COMPLIANCE_LEGEND: readonly string[] = [
  "below 50%",
  "50 to 64%",
  "65 to 79%",
  "80 to 89%",
  "90% and above",
];

export const STALENESS_LEGEND: readonly string[] = [
  "0 to 1 days",
  "2 to 3 days",
  "4 to 6 days",
  "7 days or more",
  "never sighted",
];
