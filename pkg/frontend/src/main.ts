// Bootstrap: session list / create screen, then the question workspace.
// The session id lives in the URL hash so reloads land on the same
// session and reproduce its server-side state.

import { ApiClient } from "./api.js";
import { renderWorkspace } from "./render.js";
import { SessionStore } from "./store.js";

const CONFIG_CODES = [
  "SLOBE", "SLOB", "SLNC", "SMNC", "MLNC", "MMNC", "SLOC", "SMOC", "MLOC", "MMOC",
];

const api = new ApiClient("");
const store = new SessionStore(api);

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

async function renderSessionList(root: HTMLElement): Promise<void> {
  root.textContent = "";
  root.appendChild(el("h2", undefined, "Sessions"));

  const sessions = await api.listSessions();
  const list = el("ul", "session-list");
  for (const session of sessions) {
    const item = el("li");
    const link = el(
      "a",
      undefined,
      `${session.session_id} — ${session.config_code} (${session.n_questions} questions)`,
    );
    link.href = `#session/${session.session_id}`;
    item.appendChild(link);
    list.appendChild(item);
  }
  if (sessions.length === 0) list.appendChild(el("li", "empty", "none yet"));
  root.appendChild(list);

  root.appendChild(el("h2", undefined, "New session"));
  const form = el("form", "create-form");

  const corpusSelect = el("select");
  const corpora = await api.listCorpora();
  for (const corpus of corpora) {
    const option = el("option", undefined, `${corpus.name} (${corpus.corpus_id})`);
    option.value = corpus.corpus_id;
    corpusSelect.appendChild(option);
  }
  form.appendChild(labelled("Corpus", corpusSelect));

  const codeSelect = el("select");
  for (const code of CONFIG_CODES) {
    const option = el("option", undefined, code);
    option.value = code;
    if (code === "SLOC") option.selected = true;
    codeSelect.appendChild(option);
  }
  const customCode = el("input");
  customCode.placeholder = "or custom code";
  form.appendChild(labelled("Configuration", codeSelect));
  form.appendChild(labelled("Custom", customCode));

  const fileInput = el("input");
  fileInput.type = "file";
  fileInput.accept = ".csv";
  form.appendChild(labelled("Questionnaire CSV", fileInput));

  const submit = el("button", "btn", "Create session");
  submit.type = "submit";
  form.appendChild(submit);

  const status = el("p", "status");
  form.appendChild(status);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      const file = fileInput.files?.[0];
      if (!file || !corpusSelect.value) {
        status.textContent = "pick a corpus and a questionnaire CSV";
        return;
      }
      const csv = await file.text();
      const code = customCode.value.trim() || codeSelect.value;
      try {
        const sessionId = await store.createSession(corpusSelect.value, code, csv);
        window.location.hash = `#session/${sessionId}`;
      } catch (error) {
        status.textContent = `create failed: ${String(error)}`;
      }
    })();
  });

  root.appendChild(form);
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const wrap = el("label", "form-field");
  wrap.appendChild(el("span", undefined, text));
  wrap.appendChild(control);
  return wrap;
}

async function route(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const match = window.location.hash.match(/^#session\/(.+)$/);
  if (match) {
    await store.loadSession(match[1]);
    renderWorkspace(store, root);
  } else {
    await renderSessionList(root);
  }
}

store.subscribe(() => {
  const root = document.getElementById("app");
  if (root && store.session) renderWorkspace(store, root);
});

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
