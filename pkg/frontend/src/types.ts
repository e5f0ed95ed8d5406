// Client-side mirrors of the service API payloads. Every number shown in
// the UI originates from one of these; nothing is computed client-side.

export interface RetrievedHit {
  chunk_id: string;
  score: number;
  text: string;
}

export interface AnswerRecord {
  question_id: string;
  question_text: string;
  raw_answer: string;
  final_answer: string;
  retrieved: {
    technique_used: string;
    query_echo: string;
    hits: RetrievedHit[];
  };
  valid: boolean;
  invalid_reason: string | null;
  config_code: string;
  latency_ms: number;
}

export type ReviewState = "pending" | "accepted" | "edited" | "rejected";

export interface ReviewEntry {
  state: ReviewState;
  revision: number | null;
  edited_text: string | null;
}

export interface QuestionRow {
  question_id: string;
  question_text: string;
  reference_answer: string | null;
}

export interface SessionView {
  session_id: string;
  corpus_id: string;
  config_code: string;
  questionnaire: QuestionRow[];
  answers: Record<string, AnswerRecord[]>;
  review_state: Record<string, ReviewEntry>;
}

export interface SessionSummary {
  session_id: string;
  corpus_id: string;
  config_code: string;
  n_questions: number;
}

export interface CorpusSummary {
  corpus_id: string;
  name: string;
  n_files: number;
}

export interface ConfigOverrides {
  retrieval?: "similarity" | "mmr";
  k?: number;
  lambda?: number;
  placement?: "O_start" | "N_start_and_end";
  chunk_size?: number;
  overlap?: number;
  spreadsheet_mode?: "standard" | "separate";
  model_role?: "llama_like" | "mistral_like";
}

export interface GenerateResponse {
  record: AnswerRecord;
  revision: number;
  history_length: number;
}

export interface ExportRow {
  question_id: string;
  question_text: string;
  state: ReviewState;
  answer: string;
}

export interface OverrideFieldSchema {
  type: "enum" | "int" | "float";
  values?: string[];
  min?: number;
  max?: number;
}

export interface ApiSchema {
  config_overrides: Record<string, OverrideFieldSchema>;
  review_states: ReviewState[];
}

export type UiState = "idle" | "generating" | "error";
