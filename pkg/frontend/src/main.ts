/** Entry point: hash routing and the controller gluing API, state and DOM. */

import { ApiClient, ApiError } from "./api.js";
import { nextReviewPosition, ReviewSession } from "./state.js";
import { renderError, renderTrain, renderTrainList } from "./render.js";

const api = new ApiClient("");
const root = document.getElementById("app")!;

let session: ReviewSession | null = null;
let selected: number | null = null;
let operatorName = "";
let pendingError: string | null = null;

function route(): { page: "list" } | { page: "train"; trainId: string } {
  const hash = window.location.hash;
  const match = /^#\/trains\/(.+)$/.exec(hash);
  if (match) return { page: "train", trainId: decodeURIComponent(match[1]!) };
  return { page: "list" };
}

async function showList(): Promise<void> {
  try {
    const trains = await api.listTrains();
    renderTrainList(root, trains, (trainId) => {
      window.location.hash = `#/trains/${encodeURIComponent(trainId)}`;
    });
  } catch (err) {
    renderError(root, describe(err), () => void showList());
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.detail;
  return err instanceof Error ? err.message : String(err);
}

function redrawTrain(): void {
  if (!session?.state) return;
  renderTrain(root, api, session.state, selected, operatorName, pendingError, {
    pick(position) {
      selected = position;
      pendingError = null;
      redrawTrain();
    },
    submit(position, code, operator, reason) {
      operatorName = operator;
      void submitCorrection(position, code, operator, reason);
    },
  });
}

async function submitCorrection(
  position: number,
  code: string,
  operator: string,
  reason: string,
): Promise<void> {
  if (!session) return;
  try {
    pendingError = null;
    await session.submitCorrection(position, code, operator, reason);
  } catch (err) {
    // precheck failures and server errors (InvalidCode, NotFound) verbatim
    pendingError = describe(err);
  }
  redrawTrain();
}

async function showTrain(trainId: string): Promise<void> {
  session = new ReviewSession(api);
  try {
    await session.load(trainId);
  } catch (err) {
    renderError(root, describe(err), () => void showTrain(trainId));
    return;
  }
  selected = nextReviewPosition(session.state!.queue, null);
  redrawTrain();
}

function dispatch(): void {
  const current = route();
  session = null;
  selected = null;
  pendingError = null;
  if (current.page === "list") {
    void showList();
  } else {
    void showTrain(current.trainId);
  }
}

window.addEventListener("hashchange", dispatch);
window.addEventListener("keydown", (event) => {
  if (event.key === "n" && session?.state && !isTyping(event)) {
    selected = nextReviewPosition(session.state.queue, selected);
    pendingError = null;
    redrawTrain();
  }
});

function isTyping(event: KeyboardEvent): boolean {
  const target = event.target as HTMLElement | null;
  return !!target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA");
}

dispatch();
