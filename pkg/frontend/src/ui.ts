// DOM construction for the portal. Everything here is thin: state changes
// and network traffic live in the controllers.

import { ServedDocument, SummaryOffer } from "./api.js";
import {
  ChoiceView,
  DocumentView,
  EditorHandle,
  SuggestionPanelHandle,
  suggestionUiElements,
} from "./controller.js";

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

export class TextAreaEditor implements EditorHandle {
  constructor(readonly textarea: HTMLTextAreaElement) {}

  getText(): string {
    return this.textarea.value;
  }

  setText(text: string): void {
    this.textarea.value = text;
  }
}

export class DomSuggestionPanel implements SuggestionPanelHandle {
  private readonly list: HTMLDivElement;
  private readonly banner: HTMLDivElement;

  constructor(
    readonly root: HTMLElement,
    private readonly onPick: (index: number) => void,
  ) {
    this.banner = el("div", "banner hidden");
    this.list = el("div", "choices");
    const title = el("h3", undefined, "Suggested summary");
    root.append(title, this.banner, this.list);
  }

  render(choices: ChoiceView[], latencyMs: number): void {
    this.banner.classList.add("hidden");
    this.list.replaceChildren();
    choices.forEach((choice, index) => {
      const label = el("label", "choice");
      const radio = el("input");
      radio.type = "radio";
      radio.name = "suggestion-choice";
      radio.value = String(index);
      radio.addEventListener("change", () => this.onPick(index));
      const body = el("div");
      body.append(
        el("div", "choice-title", `Choice ${index + 1}`),
        el("div", "choice-text", choice.text),
        el("div", "choice-preview", choice.preview),
      );
      label.append(radio, body);
      this.list.append(label);
    });
    if (choices.length > 0) {
      this.list.append(el("div", "latency", `generated in ${latencyMs} ms`));
    }
  }

  clear(): void {
    this.list.replaceChildren();
    this.banner.classList.add("hidden");
  }

  notice(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }
}

export class DomDocumentView implements DocumentView {
  constructor(
    private readonly documentPane: HTMLElement,
    private readonly positionPane: HTMLElement,
    private readonly workspace: HTMLElement,
  ) {}

  showDocument(doc: ServedDocument): void {
    this.documentPane.textContent = doc.document;
    this.positionPane.textContent = `Document ${doc.position + 1} of ${doc.total} (${doc.document_id})`;
    this.workspace.classList.remove("hidden");
  }

  showDone(message: string): void {
    this.workspace.classList.add("hidden");
    this.positionPane.textContent = message;
    this.documentPane.textContent = "";
  }
}

export interface AnnotationUi {
  editor: TextAreaEditor;
  panel: DomSuggestionPanel | null;
  view: DomDocumentView;
  saveButton: HTMLButtonElement;
  prevButton: HTMLButtonElement;
  textarea: HTMLTextAreaElement;
}

/**
 * Build the annotation workspace. Suggestion UI appears only when
 * suggestionUiElements(task) says so; the control group renders none of it.
 */
export function buildAnnotationUi(
  root: HTMLElement,
  task: string,
  onPick: (index: number) => void,
): AnnotationUi {
  root.replaceChildren();
  const position = el("div", "position");
  const workspace = el("div", "workspace");
  const docPane = el("div", "document-pane");
  const editPane = el("div", "edit-pane");
  const textarea = el("textarea", "summary-editor");
  textarea.rows = 8;
  const withSuggestions = suggestionUiElements(task).length > 0;
  const hint = withSuggestions
    ? el("div", "enter-hint", "Edit the draft, then press ENTER for suggestions. End with two spaces to force how they begin.")
    : null;
  const buttons = el("div", "buttons");
  const prevButton = el("button", undefined, "Previous");
  const saveButton = el("button", "primary", "Save and Next");
  buttons.append(prevButton, saveButton);

  editPane.append(el("h3", undefined, "Draft Summary"), textarea);
  if (hint) editPane.append(hint);
  editPane.append(buttons);

  let panel: DomSuggestionPanel | null = null;
  workspace.append(docPane, editPane);
  if (withSuggestions) {
    const panelRoot = el("div", "suggestion-panel");
    panel = new DomSuggestionPanel(panelRoot, onPick);
    workspace.append(panelRoot);
  }
  const docTitle = el("h3", undefined, "Source document");
  docPane.prepend(docTitle);
  const docBody = el("div", "document-body");
  docPane.append(docBody);
  root.append(position, workspace);

  return {
    editor: new TextAreaEditor(textarea),
    panel,
    view: new DomDocumentView(docBody, position, workspace),
    saveButton,
    prevButton,
    textarea,
  };
}

export interface EvaluationUi {
  view: DomDocumentView;
  renderSummaries(
    summaries: SummaryOffer[],
    issueQuestions: string[],
    verdicts: string[],
    hooks: {
      onRating(key: string, rating: number): void;
      onIssue(key: string, index: number, value: boolean): void;
      onVerdict(key: string, verdict: string): void;
      onSubmit(key: string): Promise<string[]>;
    },
  ): void;
}

export function buildEvaluationUi(root: HTMLElement): EvaluationUi {
  root.replaceChildren();
  const position = el("div", "position");
  const workspace = el("div", "workspace");
  const docPane = el("div", "document-pane");
  docPane.append(el("h3", undefined, "Source document"));
  const docBody = el("div", "document-body");
  docPane.append(docBody);
  const evalPane = el("div", "evaluation-pane");
  workspace.append(docPane, evalPane);
  root.append(position, workspace);

  return {
    view: new DomDocumentView(docBody, position, workspace),
    renderSummaries(summaries, issueQuestions, verdicts, hooks) {
      evalPane.replaceChildren();
      for (const summary of summaries) {
        const card = el("div", "summary-card");
        card.append(el("h4", undefined, `Summary ${summary.key}`));
        card.append(el("p", "summary-text", summary.text));

        const ratingRow = el("div", "rating-row");
        ratingRow.append(el("span", undefined, "Quality (1 worst - 7 best): "));
        for (let rating = 1; rating <= 7; rating++) {
          const label = el("label");
          const radio = el("input");
          radio.type = "radio";
          radio.name = `rating-${summary.key}`;
          radio.addEventListener("change", () => hooks.onRating(summary.key, rating));
          label.append(radio, document.createTextNode(String(rating)));
          ratingRow.append(label);
        }
        card.append(ratingRow);

        issueQuestions.forEach((question, index) => {
          const row = el("div", "issue-row");
          row.append(el("span", undefined, question));
          for (const value of [true, false]) {
            const label = el("label");
            const radio = el("input");
            radio.type = "radio";
            radio.name = `issue-${summary.key}-${index}`;
            radio.addEventListener("change", () =>
              hooks.onIssue(summary.key, index, value),
            );
            label.append(radio, document.createTextNode(value ? "yes" : "no"));
            row.append(label);
          }
          card.append(row);
        });

        const verdictRow = el("div", "verdict-row");
        verdictRow.append(el("span", undefined, "Verdict: "));
        for (const verdict of verdicts) {
          const label = el("label");
          const radio = el("input");
          radio.type = "radio";
          radio.name = `verdict-${summary.key}`;
          radio.addEventListener("change", () => hooks.onVerdict(summary.key, verdict));
          label.append(radio, document.createTextNode(verdict.replaceAll("_", " ")));
          verdictRow.append(label);
        }
        card.append(verdictRow);

        const warn = el("div", "banner hidden");
        const submit = el("button", "primary", "Submit evaluation");
        submit.addEventListener("click", async () => {
          const missing = await hooks.onSubmit(summary.key);
          if (missing.length > 0) {
            warn.textContent = `Missing: ${missing.join(", ")}`;
            warn.classList.remove("hidden");
          } else {
            warn.classList.add("hidden");
            submit.disabled = true;
            submit.textContent = "Submitted";
          }
        });
        card.append(warn, submit);
        evalPane.append(card);
      }
    },
  };
}
