// DOM rendering: pure functions of store state. Event wiring calls back
// into the store; rendering never mutates anything.

import type { SessionStore, QuestionCard } from "./store.js";
import type { AnswerRecord } from "./types.js";

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

function validityBadge(record: AnswerRecord): HTMLElement {
  const badge = el(
    "span",
    record.valid ? "badge badge-valid" : "badge badge-invalid",
    record.valid ? "valid" : `invalid: ${record.invalid_reason ?? "?"}`,
  );
  badge.title = record.valid
    ? "answer passed post-processing checks"
    : `post-processing flagged this answer (${record.invalid_reason})`;
  return badge;
}

function renderHits(record: AnswerRecord): HTMLElement {
  const wrap = el("details", "hits");
  const summary = el(
    "summary",
    undefined,
    `retrieved chunks (${record.retrieved.hits.length}, ${record.retrieved.technique_used})`,
  );
  wrap.appendChild(summary);
  for (const hit of record.retrieved.hits) {
    const row = el("div", "hit");
    const head = el("div", "hit-head");
    const link = el("a", "hit-id", hit.chunk_id);
    link.href = `#chunk-${hit.chunk_id}`;
    head.appendChild(link);
    head.appendChild(el("span", "hit-score", hit.score.toFixed(4)));
    row.appendChild(head);
    row.appendChild(el("div", "hit-text", hit.text));
    wrap.appendChild(row);
  }
  return wrap;
}

function renderHistory(card: QuestionCard): HTMLElement {
  const wrap = el("details", "history");
  wrap.appendChild(el("summary", undefined, `answer history (${card.history.length})`));
  card.history.forEach((record, revision) => {
    const row = el("div", "history-entry");
    row.appendChild(el("span", "history-rev", `#${revision}`));
    row.appendChild(validityBadge(record));
    row.appendChild(
      el("span", "history-technique", record.retrieved.technique_used),
    );
    row.appendChild(el("div", "history-text", record.final_answer || "(empty)"));
    wrap.appendChild(row);
  });
  return wrap;
}

function renderPanel(store: SessionStore, card: QuestionCard): HTMLElement {
  const panel = store.panel(card.questionId);
  const wrap = el("div", "retrieval-panel");

  const toggle = el("label", "panel-field");
  toggle.appendChild(el("span", undefined, "MMR"));
  const checkbox = el("input");
  checkbox.type = "checkbox";
  checkbox.checked = panel.retrieval === "mmr";
  checkbox.addEventListener("change", () => {
    store.setPanel(card.questionId, {
      retrieval: checkbox.checked ? "mmr" : "similarity",
    });
  });
  toggle.prepend(checkbox);
  wrap.appendChild(toggle);

  const kField = el("label", "panel-field");
  kField.appendChild(el("span", undefined, `k=${panel.k}`));
  const kSlider = el("input");
  kSlider.type = "range";
  kSlider.min = "1";
  kSlider.max = "50";
  kSlider.value = String(panel.k);
  kSlider.addEventListener("input", () => {
    store.setPanel(card.questionId, { k: Number(kSlider.value) });
  });
  kField.prepend(kSlider);
  wrap.appendChild(kField);

  const lambdaField = el("label", "panel-field");
  lambdaField.appendChild(el("span", undefined, `λ=${panel.lambda.toFixed(2)}`));
  const lambdaSlider = el("input");
  lambdaSlider.type = "range";
  lambdaSlider.min = "0";
  lambdaSlider.max = "1";
  lambdaSlider.step = "0.05";
  lambdaSlider.value = String(panel.lambda);
  lambdaSlider.disabled = panel.retrieval !== "mmr";
  lambdaSlider.addEventListener("input", () => {
    store.setPanel(card.questionId, { lambda: Number(lambdaSlider.value) });
  });
  lambdaField.prepend(lambdaSlider);
  wrap.appendChild(lambdaField);

  return wrap;
}

function renderCard(store: SessionStore, card: QuestionCard): HTMLElement {
  const wrap = el("article", `card card-${card.review.state}`);
  wrap.id = `question-${card.questionId}`;

  const head = el("header", "card-head");
  head.appendChild(el("span", "question-id", card.questionId));
  head.appendChild(el("span", `review-badge review-${card.review.state}`, card.review.state));
  wrap.appendChild(head);
  wrap.appendChild(el("p", "question-text", card.questionText));

  if (card.current) {
    const answer = el("div", "answer");
    answer.appendChild(validityBadge(card.current));
    const shown =
      card.review.state === "edited" && card.review.edited_text !== null
        ? card.review.edited_text
        : card.current.final_answer;
    answer.appendChild(el("p", "answer-text", shown || "(empty answer)"));
    wrap.appendChild(answer);
    wrap.appendChild(renderHits(card.current));
    if (card.history.length > 1) wrap.appendChild(renderHistory(card));
  } else {
    wrap.appendChild(el("p", "answer-missing", "no answer generated yet"));
  }

  if (card.uiState === "error" && card.errorMessage) {
    const toast = el("div", "toast toast-error", card.errorMessage);
    const dismiss = el("button", "toast-dismiss", "×");
    dismiss.addEventListener("click", () => store.dismissError(card.questionId));
    toast.appendChild(dismiss);
    wrap.appendChild(toast);
  }

  const controls = el("div", "controls");
  const generateBtn = el(
    "button",
    "btn btn-generate",
    card.uiState === "generating"
      ? "generating…"
      : card.current
        ? "Regenerate"
        : "Generate",
  );
  generateBtn.disabled = card.uiState === "generating";
  generateBtn.addEventListener("click", () => void store.generate(card.questionId));
  controls.appendChild(generateBtn);

  const acceptBtn = el("button", "btn btn-accept", "Accept");
  acceptBtn.disabled = !card.current || card.uiState === "generating";
  acceptBtn.addEventListener("click", () => void store.accept(card.questionId));
  controls.appendChild(acceptBtn);

  const editBtn = el("button", "btn btn-edit", "Edit");
  editBtn.disabled = !card.current || card.uiState === "generating";
  editBtn.addEventListener("click", () => {
    const editor = wrap.querySelector<HTMLElement>(".editor");
    if (editor) editor.hidden = !editor.hidden;
  });
  controls.appendChild(editBtn);

  const rejectBtn = el("button", "btn btn-reject", "Reject");
  rejectBtn.disabled = !card.current || card.uiState === "generating";
  rejectBtn.addEventListener("click", () => void store.reject(card.questionId));
  controls.appendChild(rejectBtn);

  wrap.appendChild(controls);
  wrap.appendChild(renderPanel(store, card));

  const editor = el("div", "editor");
  editor.hidden = true;
  const textarea = el("textarea", "editor-text");
  textarea.value =
    card.review.edited_text ?? card.current?.final_answer ?? "";
  const saveBtn = el("button", "btn btn-save", "Save edit");
  saveBtn.addEventListener("click", () => {
    void store.edit(card.questionId, textarea.value);
    editor.hidden = true;
  });
  editor.appendChild(textarea);
  editor.appendChild(saveBtn);
  wrap.appendChild(editor);

  return wrap;
}

export function renderWorkspace(store: SessionStore, root: HTMLElement): void {
  root.textContent = "";
  if (!store.session) {
    root.appendChild(el("p", "empty", "no session loaded"));
    return;
  }
  const progress = store.progress();
  const header = el("header", "workspace-head");
  header.appendChild(el("h2", undefined, `Session ${store.session.session_id}`));
  header.appendChild(
    el(
      "span",
      "progress",
      `${progress.accepted + progress.edited}/${progress.total} done ` +
        `(${progress.accepted} accepted, ${progress.edited} edited, ` +
        `${progress.rejected} rejected, ${progress.pending} pending)`,
    ),
  );
  const exportLink = el("a", "btn btn-export", "Export CSV");
  exportLink.href = store.exportUrl();
  exportLink.setAttribute("download", `session-${store.session.session_id}.csv`);
  header.appendChild(exportLink);
  root.appendChild(header);

  for (const card of store.cards) {
    root.appendChild(renderCard(store, card));
  }
}
