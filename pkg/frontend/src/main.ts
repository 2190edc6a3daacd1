// Portal bootstrap: session setup, then the task-appropriate workspace.

import { makeApi, PortalConfig, ServedDocument } from "./api.js";
import {
  EditorController,
  EvaluationController,
  TASK_EVALUATION,
  TASK_WITH,
  TASK_WITHOUT,
} from "./controller.js";
import { ActivityTimer } from "./timer.js";
import { buildAnnotationUi, buildEvaluationUi } from "./ui.js";

const api = makeApi("");

function mustFind<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function startAnnotation(
  root: HTMLElement,
  sessionId: string,
  task: typeof TASK_WITH | typeof TASK_WITHOUT,
): Promise<void> {
  let controller: EditorController;
  const ui = buildAnnotationUi(root, task, (index) => void controller.onChoice(index));
  const timer = new ActivityTimer();
  timer.bindVisibility(document);
  controller = new EditorController(
    api,
    sessionId,
    task,
    ui.editor,
    ui.panel,
    ui.view,
    timer,
  );

  ui.textarea.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && !event.shiftKey) {
      event.preventDefault();
      void controller.onEnter();
    }
  });
  ui.saveButton.addEventListener("click", () => void controller.saveAndNext());
  ui.prevButton.addEventListener("click", () => {
    if (window.confirm("Go back? Edits in the current example will be lost.")) {
      void controller.loadPrevious();
    }
  });
  await controller.loadNext();
}

async function startEvaluation(
  root: HTMLElement,
  sessionId: string,
  config: PortalConfig,
): Promise<void> {
  const ui = buildEvaluationUi(root);
  const view = {
    showDocument(doc: ServedDocument) {
      ui.view.showDocument(doc);
      ui.renderSummaries(doc.summaries ?? [], config.issue_questions, config.verdicts, {
        onRating: (key, rating) => controller.setRating(key, rating),
        onIssue: (key, index, value) => controller.setIssue(key, index, value),
        onVerdict: (key, verdict) => controller.setVerdict(key, verdict),
        onSubmit: (key) => controller.submit(key),
      });
    },
    showDone(message: string) {
      ui.view.showDone(message);
    },
  };
  const controller = new EvaluationController(
    api,
    sessionId,
    view,
    config.issue_questions.length,
  );
  await controller.loadNext();
}

async function main(): Promise<void> {
  const setup = mustFind<HTMLFormElement>("setup-form");
  const root = mustFind<HTMLDivElement>("portal-root");
  const status = mustFind<HTMLDivElement>("setup-status");
  const config = await api.config();

  setup.addEventListener("submit", async (event) => {
    event.preventDefault();
    const annotator = (mustFind<HTMLInputElement>("annotator-id").value || "").trim();
    const task = mustFind<HTMLSelectElement>("task-select").value;
    if (!annotator) {
      status.textContent = "Enter an annotator id.";
      return;
    }
    try {
      const session = await api.createSession(annotator, task);
      setup.classList.add("hidden");
      status.textContent = "";
      if (task === TASK_EVALUATION) {
        await startEvaluation(root, session.session_id, config);
      } else {
        await startAnnotation(
          root,
          session.session_id,
          task as typeof TASK_WITH | typeof TASK_WITHOUT,
        );
      }
    } catch (err) {
      status.textContent = String(err);
    }
  });
}

void main();
