/**
 * Context views shown above the tables: dot-array enrollment overview
 * and participant timeline bars, one block per funding group, stacked
 * so the groups can be compared at a glance.
 */

import type {
  OverviewPayload,
  TimelineEntry,
  TimelinePayload,
} from "./api.js";

export interface ContextViewOptions {
  overview: OverviewPayload;
  timeline: TimelinePayload;
}

const MS_PER_DAY = 86_400_000;

function dayNumber(isoDate: string): number {
  return Date.parse(`${isoDate}T00:00:00Z`) / MS_PER_DAY;
}

function placeholder(text: string): HTMLElement {
  const p = document.createElement("p");
  p.className = "placeholder";
  p.textContent = text;
  return p;
}

function groupHeading(fundingGroup: string): HTMLElement {
  const h3 = document.createElement("h3");
  h3.textContent = `Group ${fundingGroup}`;
  return h3;
}

function dotArrays(overview: OverviewPayload): HTMLElement {
  const section = document.createElement("section");
  section.className = "overview";
  for (const group of overview.groups) {
    const block = document.createElement("div");
    block.className = "group-block";
    block.dataset.group = group.funding_group;
    block.append(groupHeading(group.funding_group));
    if (group.teams.length === 0) {
      block.append(placeholder("no participants"));
      section.append(block);
      continue;
    }
    const grid = document.createElement("div");
    grid.className = "dot-grid";
    for (const team of group.teams) {
      const column = document.createElement("div");
      column.className = "dot-col";
      for (const member of team.participants) {
        const dot = document.createElement("span");
        dot.className = `dot status-${member.status}`;
        dot.title = `${member.participant_id}: ${member.status}`;
        column.append(dot);
      }
      const label = document.createElement("span");
      label.className = "dot-label";
      label.textContent = team.team_id;
      column.append(label);
      grid.append(column);
    }
    block.append(grid);
    section.append(block);
  }
  return section;
}

function timelineRow(
  entry: TimelineEntry,
  axisStart: number,
  axisSpan: number,
): HTMLElement {
  const row = document.createElement("div");
  row.className = "timeline-row";

  const label = document.createElement("span");
  label.className = "timeline-label";
  label.textContent = entry.participant_id;
  row.append(label);

  const track = document.createElement("div");
  track.className = "timeline-track";
  if (entry.start_date === "" || entry.end_date === "") {
    track.append(placeholder("no dates yet"));
    row.append(track);
    return row;
  }

  const start = dayNumber(entry.start_date);
  const end = dayNumber(entry.end_date);
  const bar = document.createElement("div");
  bar.className = "timeline-bar";
  bar.style.left = `${((start - axisStart) / axisSpan) * 100}%`;
  bar.style.width = `${((end - start + 1) / axisSpan) * 100}%`;
  bar.title = `${entry.participant_id}: ${entry.days_completed} days completed`;

  const fill = document.createElement("div");
  fill.className = "timeline-fill";
  fill.style.width = `${entry.pct_progress}%`;
  bar.append(fill);
  track.append(bar);
  row.append(track);
  return row;
}

function timelineChart(timeline: TimelinePayload): HTMLElement {
  const section = document.createElement("section");
  section.className = "timeline";
  const dated = timeline.groups
    .flatMap((g) => g.participants)
    .filter((p) => p.start_date !== "" && p.end_date !== "");
  const axisStart = Math.min(...dated.map((p) => dayNumber(p.start_date)));
  const axisEnd = Math.max(...dated.map((p) => dayNumber(p.end_date)));
  const axisSpan = Math.max(axisEnd - axisStart + 1, 1);

  for (const group of timeline.groups) {
    const block = document.createElement("div");
    block.className = "group-block";
    block.dataset.group = group.funding_group;
    block.append(groupHeading(group.funding_group));
    if (group.participants.length === 0) {
      block.append(placeholder("no participants"));
    } else {
      for (const entry of group.participants) {
        block.append(timelineRow(entry, axisStart, axisSpan));
      }
    }
    section.append(block);
  }
  return section;
}

/** Render both context views into `root`, replacing previous content. */
export function renderContext(
  root: HTMLElement,
  opts: ContextViewOptions,
): void {
  root.replaceChildren();
  const total = opts.overview.groups.reduce(
    (n, group) =>
      n +
      group.teams.reduce((m, team) => m + team.participants.length, 0),
    0,
  );
  if (total === 0) {
    root.append(placeholder("no participants"));
    return;
  }
  root.append(dotArrays(opts.overview), timelineChart(opts.timeline));
}

/** Non-blocking context load failure: banner plus a retry button. */
export function renderContextError(
  root: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  root.replaceChildren();
  const banner = document.createElement("div");
  banner.className = "error-banner";
  const text = document.createElement("span");
  text.textContent = message;
  const retry = document.createElement("button");
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  banner.append(text, retry);
  root.append(banner);
}
