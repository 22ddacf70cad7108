// JSON shapes of the engine's HTTP API. Field names mirror the wire format
// exactly so responses can be used without mapping layers.

export type Role = "source" | "target";
export type LinkLevel = "paragraph" | "sentence";
export type LinkOrigin = "manual" | "llm" | "baseline";

export interface DocumentMeta {
  title: string;
  author: string;
  genre: string;
  publication_date: string;
  publisher: string;
  domain: string;
  document_type: string;
  language: string;
  source_url: string;
}

export interface Sentence {
  sent_id: string;
  text: string;
}

export interface Paragraph {
  para_id: string;
  raw_text: string;
  sentences: Sentence[];
}

export interface Doc {
  doc_id: string;
  role: Role;
  meta: DocumentMeta;
  paragraphs: Paragraph[];
}

export interface Link {
  link_id: string;
  level: LinkLevel;
  source_ids: string[];
  target_ids: string[];
  comment: string;
  techniques: string[];
  origin: LinkOrigin;
  confidence: number | null;
}

export interface TechniqueDef {
  name: string;
  description: string;
  examples: string[];
}

export interface PromptTemplate {
  template_id: string;
  name: string;
  body: string;
  required_placeholders: string[];
  description: string;
}

export interface ProjectData {
  project_id: string;
  name: string;
  source_doc: Doc;
  target_doc: Doc;
  links: Link[];
  taxonomy: TechniqueDef[];
  prompt_templates: PromptTemplate[];
  created_at: string;
  updated_at: string;
}

export interface Depths {
  revision: number;
  undo_depth: number;
  redo_depth: number;
}

export interface ProjectEnvelope extends Depths {
  project: ProjectData;
}

export interface ProjectSummary extends Depths {
  project_id: string;
  name: string;
  created_at: string;
  updated_at: string;
  link_count: number;
}

export interface PayloadSentence {
  id: string;
  text: string;
}

export interface PayloadLink {
  source_ids: string[];
  target_ids: string[];
  confidence?: number;
}

export interface SuggestionPayload {
  source_sentences: PayloadSentence[];
  target_sentences: PayloadSentence[];
  links: PayloadLink[];
}

export interface SuggestResponse {
  src_para_id: string;
  tgt_para_id: string;
  origin: LinkOrigin;
  retry_count: number;
  reason: string;
  failures: { code: string; path: string; message: string }[];
  payload: SuggestionPayload;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: unknown;
}

export interface Violation {
  code: string;
  subject: string;
  message: string;
}
