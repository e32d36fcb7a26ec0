import type { Outcome, RecordFields, ReviewItem, Stats } from "./types.js";
import { FIELD_ORDER } from "./types.js";
import type { SessionState } from "./session.js";

function displayValue(fields: RecordFields, key: keyof RecordFields): string {
  const value = fields[key];
  return value === null || value === undefined || value === ""
    ? "Unknown"
    : String(value);
}

function outcomeClass(outcome: Outcome | undefined): string {
  return outcome ?? "missing";
}

/** Render the side-by-side pair table: one row per canonical field, styled
 *  by the service-provided comparator outcome (never recomputed here). */
export function renderPair(doc: Document, item: ReviewItem): HTMLElement {
  const table = doc.createElement("table");
  table.className = "pair-table";
  const head = doc.createElement("tr");
  for (const label of ["Field", `Record ${item.left.record_id}`,
                       `Record ${item.right.record_id}`]) {
    const th = doc.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const [field, label] of FIELD_ORDER) {
    const row = doc.createElement("tr");
    row.className = `field-row ${outcomeClass(item.outcomes[field])}`;
    row.dataset.field = field;
    const cells = [label, displayValue(item.left, field),
                   displayValue(item.right, field)];
    for (const text of cells) {
      const td = doc.createElement("td");
      td.textContent = text;
      row.appendChild(td);
    }
    table.appendChild(row);
  }
  return table;
}

export function renderScoreGauge(doc: Document, score: number): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "score-gauge";
  const bar = doc.createElement("div");
  bar.className = "score-bar";
  bar.style.width = `${(score * 100).toFixed(1)}%`;
  const label = doc.createElement("span");
  label.className = "score-label";
  label.textContent = `overall score ${score.toFixed(3)}`;
  wrap.appendChild(bar);
  wrap.appendChild(label);
  return wrap;
}

export function renderStats(stats: Stats | null): string {
  if (stats === null) {
    return "stats unavailable";
  }
  return `pending ${stats.pending} · decided ${stats.decided} · ` +
    `skipped ${stats.skipped}`;
}

/** Full-screen state render into fixed mount points. */
export function renderState(doc: Document, state: SessionState): void {
  const statsEl = doc.getElementById("stats");
  if (statsEl) {
    statsEl.textContent = renderStats(state.stats);
  }

  const bannerEl = doc.getElementById("banner");
  if (bannerEl) {
    const showBanner = state.banner !== null;
    bannerEl.classList.toggle("hidden", !showBanner);
    const message = bannerEl.querySelector(".banner-message");
    if (message) {
      message.textContent = showBanner
        ? `${state.banner}${state.unsent > 0 ? ` (${state.unsent} unsent)` : ""}`
        : "";
    }
  }

  const mount = doc.getElementById("pair");
  if (!mount) {
    return;
  }
  mount.textContent = "";
  if (state.item !== null) {
    mount.appendChild(renderScoreGauge(doc, state.item.overall_score));
    mount.appendChild(renderPair(doc, state.item));
  } else if (state.queueEmpty) {
    const done = doc.createElement("p");
    done.className = "queue-empty";
    done.textContent = "Queue empty — nothing left to review.";
    mount.appendChild(done);
  }
}
