/**
 * Dashboard page wiring: create/attach to a session, stream events into
 * the view state, and render controls, ROI editor, thumbnail grid, and
 * diversity chart.  All mutations go through the service; this file owns
 * only presentation state.
 */

import { ServiceClient, ServiceError } from "./api.js";
import type { RoiIntervals, SessionState } from "./api.js";
import { chartModel } from "./chart.js";
import { SessionStream } from "./events.js";
import { visibleWindow } from "./grid.js";
import {
  draftsFromRoi,
  draftsToRoi,
  validateDrafts,
  type IntervalDraft,
} from "./roi.js";
import {
  applyEvent,
  applyOwnRoi,
  initialView,
  resumeIndex,
  type SessionView,
} from "./state.js";

const client = new ServiceClient(
  (window as { SERVICE_BASE?: string }).SERVICE_BASE ?? "",
);

let view: SessionView = initialView();
let sessionId: string | null = null;
let stream: SessionStream | null = null;
let drafts: IntervalDraft[] = draftsFromRoi({});
let budget = 1000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, kind: "ok" | "warn" | "error" = "ok"): void {
  const banner = el<HTMLDivElement>("status");
  banner.textContent = text;
  banner.dataset.kind = kind;
}

function fmtState(state: SessionState): string {
  return state.toUpperCase();
}

// ---------------------------------------------------------------------------
// rendering

function renderHeader(): void {
  el<HTMLSpanElement>("session-id").textContent = sessionId ?? "none";
  el<HTMLSpanElement>("session-state").textContent = fmtState(
    view.sessionState,
  );
  const m = view.metrics[view.metrics.length - 1];
  el<HTMLSpanElement>("stat-samples").textContent = String(
    view.discoveries.length,
  );
  el<HTMLSpanElement>("stat-global").textContent = m
    ? String(m.global_div)
    : "0";
  el<HTMLSpanElement>("stat-constrained").textContent = m
    ? String(m.constrained_div)
    : "0";
  el<HTMLSpanElement>("stat-acceptance").textContent = m
    ? `${(m.acceptance * 100).toFixed(1)}%`
    : "0.0%";
  const census = view.census;
  el<HTMLSpanElement>("stat-census").textContent = census
    ? `${census.inlier_count}/${census.total}`
    : "-";
}

function renderGrid(): void {
  const grid = el<HTMLDivElement>("grid");
  const ratio =
    grid.scrollHeight > grid.clientHeight
      ? grid.scrollTop / (grid.scrollHeight - grid.clientHeight)
      : 0;
  const win = visibleWindow(view.discoveries.length, ratio);
  grid.replaceChildren();
  if (win.start > 0) {
    const skipped = document.createElement("div");
    skipped.className = "grid-gap";
    skipped.textContent = `... ${win.start} earlier patterns`;
    grid.appendChild(skipped);
  }
  for (let i = win.start; i < win.end; i++) {
    const d = view.discoveries[i];
    if (!d) continue;
    const cell = document.createElement("figure");
    cell.className = d.classification === 1 ? "cell inlier" : "cell";
    const img = document.createElement("img");
    img.src = d.thumbnail_url;
    img.alt = `pattern ${d.index}`;
    img.loading = "lazy";
    img.width = 64;
    img.height = 64;
    const caption = document.createElement("figcaption");
    caption.textContent =
      d.classification === 1 ? `#${d.index} ✓` : `#${d.index}`;
    cell.append(img, caption);
    grid.appendChild(cell);
  }
}

function renderChart(): void {
  const canvas = el<HTMLCanvasElement>("chart");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const model = chartModel(view.metrics, budget, {
    width: canvas.width,
    height: canvas.height,
    padLeft: 42,
    padRight: 8,
    padTop: 8,
    padBottom: 22,
  });
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "10px sans-serif";
  ctx.fillStyle = "#667";
  ctx.strokeStyle = "#dde";
  for (const tick of model.ticks) {
    ctx.beginPath();
    ctx.moveTo(42, tick.y);
    ctx.lineTo(canvas.width - 8, tick.y);
    ctx.stroke();
    ctx.fillText(String(tick.value), 4, tick.y + 3);
  }
  const strokeSeries = (points: { x: number; y: number }[], color: string) => {
    if (points.length < 2) return;
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    points.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
    ctx.stroke();
  };
  strokeSeries(model.global, "#3366cc");
  strokeSeries(model.constrained, "#cc4433");
}

function renderRoiEditor(): void {
  const tbody = el<HTMLTableSectionElement>("roi-rows");
  tbody.replaceChildren();
  for (const draft of drafts) {
    const row = document.createElement("tr");

    const enable = document.createElement("input");
    enable.type = "checkbox";
    enable.checked = draft.enabled;
    enable.addEventListener("change", () => {
      draft.enabled = enable.checked;
    });

    const lo = document.createElement("input");
    lo.type = "number";
    lo.step = "any";
    lo.value = String(draft.lo);
    lo.addEventListener("input", () => {
      draft.lo = Number(lo.value);
    });

    const hi = document.createElement("input");
    hi.type = "number";
    hi.step = "any";
    hi.value = String(draft.hi);
    hi.addEventListener("input", () => {
      draft.hi = Number(hi.value);
    });

    const range = view.featureRanges[draft.feature];
    const observed = range
      ? `${range.min.toPrecision(3)} .. ${range.max.toPrecision(3)}`
      : "-";

    for (const content of [
      enable,
      document.createTextNode(draft.feature),
      lo,
      hi,
      document.createTextNode(observed),
    ]) {
      const td = document.createElement("td");
      td.appendChild(content);
      row.appendChild(td);
    }
    tbody.appendChild(row);
  }
}

function renderAll(): void {
  renderHeader();
  renderGrid();
  renderChart();
}

// ---------------------------------------------------------------------------
// service plumbing

async function refreshSnapshot(): Promise<void> {
  if (!sessionId) return;
  const snap = await client.getSession(sessionId);
  view = {
    ...view,
    sessionState: snap.state,
    roi: snap.roi,
    census: { inlier_count: snap.inlier_count, total: snap.history_length },
    roiStale: false,
  };
  drafts = draftsFromRoi(snap.roi);
  renderRoiEditor();
  renderAll();
}

function handleEvent(name: string, data: unknown): void {
  view = applyEvent(view, name, data);
  if (view.roiStale) {
    // Another client edited the ROI; re-sync rather than guess.
    void refreshSnapshot();
  }
  renderAll();
}

function openStream(): void {
  stream?.close();
  if (!sessionId) return;
  const id = sessionId;
  stream = new SessionStream({
    urlFor: (since) => client.eventsUrl(id, since),
    onEvent: handleEvent,
    getResumeIndex: () => resumeIndex(view),
    onStatus: (status) => {
      if (status === "open") setStatus("stream connected");
      else if (status === "retrying") setStatus("stream lost; retrying", "warn");
    },
  });
  stream.connect();
}

async function createSession(): Promise<void> {
  const system = el<HTMLSelectElement>("system").value;
  budget = Number(el<HTMLInputElement>("budget").value) || 1000;
  const nInit = Number(el<HTMLInputElement>("n-init").value) || 250;
  const balance = Number(el<HTMLInputElement>("balance").value);
  const roi: RoiIntervals = { volume: [0.6, 0.7] };
  try {
    const created = await client.createSession({
      system,
      config: {
        method: "NRAB",
        budget,
        n_init: nInit,
        balance_prob: balance,
      },
      roi,
    });
    sessionId = created.id;
    view = initialView(roi);
    drafts = draftsFromRoi(roi);
    renderRoiEditor();
    renderAll();
    openStream();
    setStatus(`session ${created.id} created`);
  } catch (err) {
    setStatus(
      err instanceof ServiceError ? err.message : `create failed: ${err}`,
      "error",
    );
  }
}

async function control(action: "run" | "pause" | "step"): Promise<void> {
  if (!sessionId) return;
  try {
    if (action === "step") {
      const n = Number(el<HTMLInputElement>("step-n").value) || 1;
      await client.control(sessionId, "step", n);
    } else {
      await client.control(sessionId, action);
    }
  } catch (err) {
    setStatus(
      err instanceof ServiceError ? err.message : String(err),
      "error",
    );
  }
}

async function applyRoi(): Promise<void> {
  if (!sessionId) return;
  const problems = validateDrafts(drafts);
  const messages = el<HTMLDivElement>("roi-errors");
  messages.textContent = problems.join("; ");
  if (problems.length > 0) return; // rejected client-side, nothing sent
  const roi = draftsToRoi(drafts);
  try {
    const census = await client.putRoi(sessionId, roi);
    view = applyOwnRoi(view, roi, census);
    renderAll();
    setStatus(
      `ROI applied: ${census.inlier_count}/${census.total} inliers`,
    );
  } catch (err) {
    setStatus(
      err instanceof ServiceError ? err.message : String(err),
      "error",
    );
  }
}

// ---------------------------------------------------------------------------
// boot

function boot(): void {
  el<HTMLButtonElement>("create").addEventListener("click", () => {
    void createSession();
  });
  el<HTMLButtonElement>("run").addEventListener("click", () => {
    void control("run");
  });
  el<HTMLButtonElement>("pause").addEventListener("click", () => {
    void control("pause");
  });
  el<HTMLButtonElement>("step").addEventListener("click", () => {
    void control("step");
  });
  el<HTMLButtonElement>("roi-apply").addEventListener("click", () => {
    void applyRoi();
  });
  const balance = el<HTMLInputElement>("balance");
  balance.addEventListener("input", () => {
    el<HTMLSpanElement>("balance-value").textContent = balance.value;
  });
  el<HTMLDivElement>("grid").addEventListener("scroll", () => renderGrid());
  renderRoiEditor();
  renderAll();
  setStatus("no session; create one to begin");
}

boot();
