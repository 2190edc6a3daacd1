// Portal state machines, kept free of DOM types so they run under plain
// node tests. The DOM layer implements the narrow handles below.

import { ApiError, PortalApi, ServedDocument, SuggestResponse } from "./api.js";
import { ActivityTimer } from "./timer.js";

export const TASK_WITH = "with_interaction";
export const TASK_WITHOUT = "without_interaction";
export const TASK_EVALUATION = "evaluation";

export type AnnotationTask = typeof TASK_WITH | typeof TASK_WITHOUT;

export interface EditorHandle {
  getText(): string;
  setText(text: string): void;
}

export interface ChoiceView {
  text: string;
  preview: string;
}

export interface SuggestionPanelHandle {
  render(choices: ChoiceView[], latencyMs: number): void;
  clear(): void;
  notice(message: string): void;
}

export interface DocumentView {
  showDocument(doc: ServedDocument): void;
  showDone(message: string): void;
}

/**
 * Which suggestion-related UI elements a task renders. The control group
 * gets none at all; the DOM layer builds exactly this list.
 */
export function suggestionUiElements(task: string): string[] {
  if (task === TASK_WITH) {
    return ["suggestion-panel", "choice-radios", "enter-hint"];
  }
  return [];
}

export class EditorController {
  lastCommitted = "";
  currentDocument: ServedDocument | null = null;
  pending: SuggestResponse | null = null;

  private inFlight: AbortController | null = null;
  private requestSeq = 0;
  private choosing = false;

  constructor(
    private readonly api: PortalApi,
    private readonly sessionId: string,
    readonly task: AnnotationTask,
    private readonly editor: EditorHandle,
    private readonly panel: SuggestionPanelHandle | null,
    private readonly view: DocumentView,
    private readonly timer: ActivityTimer = new ActivityTimer(),
  ) {}

  get interactive(): boolean {
    return this.task === TASK_WITH;
  }

  private adopt(doc: ServedDocument): void {
    this.currentDocument = doc;
    this.lastCommitted = doc.draft_summary;
    this.editor.setText(doc.draft_summary);
    this.pending = null;
    this.panel?.clear();
    this.view.showDocument(doc);
    this.timer.reset();
    this.timer.start();
  }

  async loadNext(): Promise<void> {
    try {
      this.adopt(await this.api.next(this.sessionId));
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.view.showDone("All documents are annotated.");
        return;
      }
      throw err;
    }
  }

  async loadPrevious(): Promise<void> {
    try {
      this.adopt(await this.api.prev(this.sessionId));
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.panel?.notice("No previous document.");
        return;
      }
      throw err;
    }
  }

  /**
   * ENTER handler: identical editor text means no request at all; otherwise
   * exactly one suggest call goes out and any older in-flight one is
   * aborted. Errors surface as a banner and never touch the editor.
   */
  async onEnter(): Promise<void> {
    if (!this.interactive || this.panel === null) {
      return;
    }
    const text = this.editor.getText();
    if (text === this.lastCommitted) {
      this.panel.notice("No edit detected - change the summary first.");
      return;
    }
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    const seq = ++this.requestSeq;
    try {
      const response = await this.api.suggest(
        this.sessionId,
        this.lastCommitted,
        text,
        controller.signal,
      );
      if (seq !== this.requestSeq) {
        return; // a newer ENTER superseded this request
      }
      this.pending = response;
      this.panel.render(
        response.suggestions.map((s, i) => ({
          text: s.text,
          preview: response.previews[i],
        })),
        response.latency_ms,
      );
      if (response.suggestions.length === 0) {
        this.panel.notice("No suggestion available for this edit.");
      }
    } catch (err) {
      if (seq !== this.requestSeq) {
        return;
      }
      if (err instanceof ApiError) {
        this.panel.notice(err.message);
        return;
      }
      if ((err as Error).name === "AbortError") {
        return;
      }
      throw err;
    } finally {
      if (this.inFlight === controller) {
        this.inFlight = null;
      }
    }
  }

  /** Adopt a choice: the server preview becomes the editor content. */
  async onChoice(index: number): Promise<void> {
    if (this.pending === null || this.choosing) {
      return;
    }
    this.choosing = true;
    try {
      const { summary } = await this.api.choose(this.sessionId, index);
      this.editor.setText(summary);
      this.lastCommitted = summary;
      this.pending = null;
      this.panel?.clear();
    } catch (err) {
      if (err instanceof ApiError) {
        this.pending = null;
        this.panel?.clear();
        this.panel?.notice(err.message);
        return;
      }
      throw err;
    } finally {
      this.choosing = false;
    }
  }

  async saveAndNext(): Promise<void> {
    this.timer.pause();
    await this.api.save(this.sessionId, this.editor.getText(), this.timer.elapsedMs);
    this.lastCommitted = this.editor.getText();
    await this.loadNext();
  }
}

export interface EvaluationFormState {
  rating: number | null;
  issues: (boolean | null)[];
  verdict: string | null;
  submitted: boolean;
}

export function emptyForm(nIssues: number): EvaluationFormState {
  return {
    rating: null,
    issues: new Array<boolean | null>(nIssues).fill(null),
    verdict: null,
    submitted: false,
  };
}

export class EvaluationController {
  currentDocument: ServedDocument | null = null;
  forms = new Map<string, EvaluationFormState>();

  constructor(
    private readonly api: PortalApi,
    private readonly sessionId: string,
    private readonly view: DocumentView,
    readonly nIssues = 7,
  ) {}

  async loadNext(): Promise<void> {
    try {
      const doc = await this.api.next(this.sessionId);
      this.currentDocument = doc;
      this.forms = new Map(
        (doc.summaries ?? []).map((s) => [s.key, emptyForm(this.nIssues)]),
      );
      this.view.showDocument(doc);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.view.showDone("All documents are evaluated.");
        return;
      }
      throw err;
    }
  }

  setRating(key: string, rating: number): void {
    const form = this.forms.get(key);
    if (form) form.rating = rating;
  }

  setIssue(key: string, index: number, value: boolean): void {
    const form = this.forms.get(key);
    if (form) form.issues[index] = value;
  }

  setVerdict(key: string, verdict: string): void {
    const form = this.forms.get(key);
    if (form) form.verdict = verdict;
  }

  /** Names of the fields still missing; submission is blocked until empty. */
  missingFields(key: string): string[] {
    const form = this.forms.get(key);
    if (!form) return ["unknown summary"];
    const missing: string[] = [];
    if (form.rating === null) missing.push("rating");
    form.issues.forEach((v, i) => {
      if (v === null) missing.push(`issue ${i + 1}`);
    });
    if (form.verdict === null) missing.push("verdict");
    return missing;
  }

  async submit(key: string): Promise<string[]> {
    const missing = this.missingFields(key);
    if (missing.length > 0) {
      return missing;
    }
    const form = this.forms.get(key)!;
    await this.api.evaluate(this.sessionId, {
      key,
      rating: form.rating!,
      issues: form.issues.map((v) => v === true),
      verdict: form.verdict!,
    });
    form.submitted = true;
    if ([...this.forms.values()].every((f) => f.submitted)) {
      await this.loadNext();
    }
    return [];
  }
}
