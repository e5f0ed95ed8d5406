// Session workspace state machine. Holds the last server-confirmed session
// view plus per-question UI state; every mutation round-trips through the
// API and replaces local state with the server's answer, so a page reload
// (loadSession) always reproduces what is already on screen.

import { ApiClient, ApiError } from "./api.js";
import type {
  AnswerRecord,
  ConfigOverrides,
  ReviewEntry,
  ReviewState,
  SessionView,
  UiState,
} from "./types.js";

export interface QuestionCard {
  questionId: string;
  questionText: string;
  referenceAnswer: string | null;
  history: AnswerRecord[];
  current: AnswerRecord | null;
  review: ReviewEntry;
  uiState: UiState;
  errorMessage: string | null;
}

export interface RetrievalPanel {
  retrieval: "similarity" | "mmr";
  k: number;
  lambda: number;
}

const DEFAULT_PANEL: RetrievalPanel = { retrieval: "similarity", k: 20, lambda: 0.5 };

export interface Progress {
  total: number;
  accepted: number;
  edited: number;
  rejected: number;
  pending: number;
}

export class SessionStore {
  session: SessionView | null = null;
  cards: QuestionCard[] = [];
  panels = new Map<string, RetrievalPanel>();
  listeners = new Set<() => void>();

  constructor(private api: ApiClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  panel(questionId: string): RetrievalPanel {
    let panel = this.panels.get(questionId);
    if (!panel) {
      panel = { ...DEFAULT_PANEL };
      this.panels.set(questionId, panel);
    }
    return panel;
  }

  setPanel(questionId: string, patch: Partial<RetrievalPanel>): void {
    Object.assign(this.panel(questionId), patch);
    this.notify();
  }

  private card(questionId: string): QuestionCard {
    const card = this.cards.find((c) => c.questionId === questionId);
    if (!card) throw new Error(`unknown question ${questionId}`);
    return card;
  }

  /** Rebuild all cards from a server session view (initial load or reload). */
  private applySession(view: SessionView): void {
    const previous = new Map(this.cards.map((c) => [c.questionId, c]));
    this.session = view;
    this.cards = view.questionnaire.map((q) => {
      const history = view.answers[q.question_id] ?? [];
      const review: ReviewEntry = view.review_state[q.question_id] ?? {
        state: "pending",
        revision: null,
        edited_text: null,
      };
      const prior = previous.get(q.question_id);
      return {
        questionId: q.question_id,
        questionText: q.question_text,
        referenceAnswer: q.reference_answer ?? null,
        history,
        current: history.length > 0 ? history[history.length - 1] : null,
        review,
        uiState: prior?.uiState === "generating" ? "generating" : "idle",
        errorMessage: null,
      };
    });
    this.notify();
  }

  async loadSession(sessionId: string): Promise<void> {
    this.applySession(await this.api.getSession(sessionId));
  }

  async createSession(
    corpusId: string,
    configCode: string,
    questionnaireCsv: string,
  ): Promise<string> {
    const view = await this.api.createSession(corpusId, configCode, questionnaireCsv);
    this.applySession(view);
    return view.session_id;
  }

  overridesFor(questionId: string): ConfigOverrides | undefined {
    const panel = this.panels.get(questionId);
    if (!panel) return undefined;
    const overrides: ConfigOverrides = {};
    if (panel.retrieval !== DEFAULT_PANEL.retrieval) overrides.retrieval = panel.retrieval;
    if (panel.k !== DEFAULT_PANEL.k) overrides.k = panel.k;
    if (panel.lambda !== DEFAULT_PANEL.lambda) overrides.lambda = panel.lambda;
    return Object.keys(overrides).length > 0 ? overrides : undefined;
  }

  /** One in-flight generate per question card; other cards stay usable. */
  async generate(questionId: string): Promise<void> {
    if (!this.session) throw new Error("no session loaded");
    const card = this.card(questionId);
    if (card.uiState === "generating") return;
    card.uiState = "generating";
    card.errorMessage = null;
    this.notify();
    try {
      const response = await this.api.generate(
        this.session.session_id,
        questionId,
        this.overridesFor(questionId),
      );
      card.history = [...card.history, response.record];
      card.current = response.record;
      this.session.answers[questionId] = card.history;
      card.uiState = "idle";
    } catch (error) {
      card.uiState = "error";
      card.errorMessage =
        error instanceof ApiError && error.pipelineError
          ? `generation failed: ${error.pipelineError}`
          : `generation failed: ${String(error)}`;
    }
    this.notify();
  }

  /** Clear an error badge back to idle (toast dismissed). */
  dismissError(questionId: string): void {
    const card = this.card(questionId);
    if (card.uiState === "error") {
      card.uiState = "idle";
      card.errorMessage = null;
      this.notify();
    }
  }

  async setReview(
    questionId: string,
    state: ReviewState,
    editedText?: string,
  ): Promise<void> {
    if (!this.session) throw new Error("no session loaded");
    const entry = await this.api.review(
      this.session.session_id,
      questionId,
      state,
      editedText,
    );
    const card = this.card(questionId);
    card.review = entry;
    this.session.review_state[questionId] = entry;
    this.notify();
  }

  accept(questionId: string): Promise<void> {
    return this.setReview(questionId, "accepted");
  }

  edit(questionId: string, text: string): Promise<void> {
    return this.setReview(questionId, "edited", text);
  }

  reject(questionId: string): Promise<void> {
    return this.setReview(questionId, "rejected");
  }

  progress(): Progress {
    const progress: Progress = {
      total: this.cards.length,
      accepted: 0,
      edited: 0,
      rejected: 0,
      pending: 0,
    };
    for (const card of this.cards) {
      progress[card.review.state] += 1;
    }
    return progress;
  }

  exportCsv(): Promise<string> {
    if (!this.session) throw new Error("no session loaded");
    return this.api.exportCsv(this.session.session_id);
  }

  exportUrl(): string {
    if (!this.session) throw new Error("no session loaded");
    return this.api.exportCsvUrl(this.session.session_id);
  }
}
