/** DOM rendering for the review console. Logic lives in state.ts; this file
 * only turns state into elements and wires events back to the controller. */

import type { ApiClient, TrainListItem } from "./api.js";
import type { Cell, SessionState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderError(root: HTMLElement, message: string, retry: () => void): void {
  root.replaceChildren();
  const box = el("div", "error-state");
  box.append(el("p", "", `Could not load data: ${message}`));
  const button = el("button", "", "Retry");
  button.addEventListener("click", retry);
  box.append(button);
  root.append(box);
}

export function renderTrainList(
  root: HTMLElement,
  trains: TrainListItem[],
  open: (trainId: string) => void,
): void {
  root.replaceChildren();
  root.append(el("h1", "", "Trains"));
  if (trains.length === 0) {
    root.append(el("p", "empty-state", "No trains recorded yet."));
    return;
  }
  const table = el("table", "train-list");
  const head = el("tr");
  for (const title of ["Train", "Started", "Wagons", "Rejection", "Conflicts"]) {
    head.append(el("th", "", title));
  }
  table.append(head);
  for (const train of trains) {
    const row = el("tr", "train-row");
    row.append(el("td", "train-id", train.train_id));
    row.append(el("td", "", new Date(train.started_ms).toISOString()));
    row.append(el("td", "", String(train.wagon_count)));
    row.append(el("td", "", `${(train.rejection_rate * 100).toFixed(1)}%`));
    row.append(el("td", "", String(train.unresolved_conflicts)));
    row.addEventListener("click", () => open(train.train_id));
    table.append(row);
  }
  root.append(table);
}

function renderCell(api: ApiClient, cell: Cell, selected: boolean, pick: () => void): HTMLElement {
  const node = el("div", `cell border-${cell.border}${selected ? " selected" : ""}`);
  node.dataset["pos"] = String(cell.pos);
  if (cell.cropRef) {
    const img = el("img");
    img.src = api.mediaUrl(cell.cropRef);
    img.alt = `wagon ${cell.pos}`;
    img.addEventListener("error", () => {
      img.replaceWith(el("div", "slot", "crop unavailable"));
    });
    node.append(img);
  } else {
    node.append(el("div", "slot", "probable frame"));
  }
  node.append(el("div", "code", cell.code ?? "?"));
  const meta = el("div", "meta", `#${cell.pos} · ${cell.status}`);
  if (cell.correctedBy) meta.append(el("span", "badge corrected", "corrected"));
  if (cell.conflict) meta.append(el("span", "badge conflict", "conflict"));
  if (cell.maintenanceFlag) meta.append(el("span", "badge maintenance", "maintenance"));
  node.append(meta);
  node.addEventListener("click", pick);
  return node;
}

export interface DetailHandlers {
  submit: (position: number, code: string, operator: string, reason: string) => void;
}

function renderDetail(
  state: SessionState,
  position: number | null,
  operatorName: string,
  pendingError: string | null,
  handlers: DetailHandlers,
): HTMLElement {
  const pane = el("div", "detail");
  if (position === null) {
    pane.append(el("p", "empty-state", "Select a wagon (or press n for the next flagged one)."));
    return pane;
  }
  const cell = state.cells.find((c) => c.pos === position);
  if (!cell) return pane;
  pane.append(el("h2", "", `Wagon #${cell.pos}`));
  pane.append(el("p", "", `status: ${cell.status}${cell.rejectReason ? ` (${cell.rejectReason})` : ""}`));
  if (cell.code) pane.append(el("p", "code", cell.code));

  const form = el("form", "correction-form");
  const codeInput = el("input") as HTMLInputElement;
  codeInput.placeholder = "corrected code, e.g. HFE-094063-1";
  codeInput.name = "code";
  const operatorInput = el("input") as HTMLInputElement;
  operatorInput.placeholder = "operator name (required)";
  operatorInput.name = "operator";
  operatorInput.value = operatorName;
  const reasonInput = el("input") as HTMLInputElement;
  reasonInput.placeholder = "reason";
  reasonInput.name = "reason";
  reasonInput.value = "operator review";
  const damaged = el("input") as HTMLInputElement;
  damaged.type = "checkbox";
  damaged.name = "damaged";
  const damagedLabel = el("label", "damaged-label", " flag damaged paint for maintenance");
  damagedLabel.prepend(damaged);
  const error = el("p", "inline-error", pendingError ?? "");
  const submit = el("button", "", "Submit correction");
  form.append(codeInput, operatorInput, reasonInput, damagedLabel, error, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.submit(
      cell.pos,
      codeInput.value,
      operatorInput.value,
      damaged.checked ? "mark_damaged" : reasonInput.value || "operator review",
    );
  });
  pane.append(form);
  return pane;
}

export function renderTrain(
  root: HTMLElement,
  api: ApiClient,
  state: SessionState,
  selected: number | null,
  operatorName: string,
  pendingError: string | null,
  handlers: DetailHandlers & { pick: (position: number) => void },
): void {
  root.replaceChildren();
  const header = el("div", "train-header");
  header.append(el("h1", "", state.trainId));
  const stats = state.view.stats;
  header.append(
    el(
      "p",
      "stats",
      `${state.view.wagon_count} wagons · ${stats.accepted} accepted · ` +
        `${stats.accepted_damaged} damaged-but-read · ${stats.rejected} rejected · ` +
        `${stats.not_located} not located`,
    ),
  );
  root.append(header);

  const layout = el("div", "layout");
  const grid = el("div", "grid");
  for (const cell of state.cells) {
    grid.append(renderCell(api, cell, cell.pos === selected, () => handlers.pick(cell.pos)));
  }
  layout.append(grid);

  const side = el("div", "side");
  const queuePane = el("div", "queue");
  queuePane.append(el("h2", "", `Review queue (${state.queue.length})`));
  for (const pos of state.queue) {
    const cell = state.cells.find((c) => c.pos === pos)!;
    const entry = el(
      "div",
      `queue-entry${pos === selected ? " selected" : ""}`,
      `#${pos} ${cell.status}${cell.conflict ? " conflict" : ""}`,
    );
    entry.addEventListener("click", () => handlers.pick(pos));
    queuePane.append(entry);
  }
  side.append(queuePane);
  side.append(renderDetail(state, selected, operatorName, pendingError, handlers));
  layout.append(side);
  root.append(layout);
}
