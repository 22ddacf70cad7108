/**
 * Editor view state and the pure logic behind it.
 *
 * The UI never mutates alignment state locally: every edit goes through the
 * API and the authoritative project is re-read from responses. What lives
 * here is presentation state (selection, fonts, pending suggestions, last
 * seen revision) plus the derivations the DOM layer renders from.
 */
import type {
  Link,
  LinkLevel,
  LinkOrigin,
  PayloadLink,
  ProjectData,
  SuggestionPayload,
  SuggestResponse,
} from "./types.js";
import type { PaneFonts } from "./fonts.js";
import { defaultFonts } from "./fonts.js";

export type Side = "source" | "target";

export interface Selection {
  level: LinkLevel;
  source: Set<string>;
  target: Set<string>;
}

export interface PendingSuggestion {
  srcParaId: string;
  tgtParaId: string;
  origin: LinkOrigin;
  payload: SuggestionPayload;
  // Per-link review flags, parallel to payload.links.
  kept: boolean[];
}

export interface EditorViewState {
  selectedLink: string | null;
  paneFonts: PaneFonts;
  pending: PendingSuggestion | null;
  revision: number;
  undoDepth: number;
  redoDepth: number;
  selection: Selection;
}

export function initialViewState(): EditorViewState {
  return {
    selectedLink: null,
    paneFonts: defaultFonts(),
    pending: null,
    revision: 0,
    undoDepth: 0,
    redoDepth: 0,
    selection: emptySelection("sentence"),
  };
}

export function emptySelection(level: LinkLevel): Selection {
  return { level, source: new Set(), target: new Set() };
}

export function toggleBlock(
  selection: Selection,
  side: Side,
  id: string,
): void {
  const bucket = selection[side];
  if (bucket.has(id)) {
    bucket.delete(id);
  } else {
    bucket.add(id);
  }
}

export type Cardinality = "empty" | "null" | "1:1" | "1:N" | "M:1" | "M:N";

export function selectionCardinality(selection: Selection): Cardinality {
  const s = selection.source.size;
  const t = selection.target.size;
  if (s === 0 && t === 0) return "empty";
  if (s === 0 || t === 0) return "null";
  if (s === 1 && t === 1) return "1:1";
  if (s === 1) return "1:N";
  if (t === 1) return "M:1";
  return "M:N";
}

export function cardinalityOfLink(link: {
  source_ids: string[];
  target_ids: string[];
}): Cardinality {
  return selectionCardinality({
    level: "sentence",
    source: new Set(link.source_ids),
    target: new Set(link.target_ids),
  });
}

/**
 * Body for POST /links from the current selection, or null when there is
 * nothing to link. Single-sided selections become null links (0:1 / 1:0).
 */
export function linkBodyFromSelection(
  selection: Selection,
): { level: LinkLevel; source_ids: string[]; target_ids: string[] } | null {
  if (selectionCardinality(selection) === "empty") {
    return null;
  }
  return {
    level: selection.level,
    source_ids: [...selection.source].sort(),
    target_ids: [...selection.target].sort(),
  };
}

export function canUndo(state: EditorViewState): boolean {
  return state.undoDepth > 0;
}

export function canRedo(state: EditorViewState): boolean {
  return state.redoDepth > 0;
}

export function setDepths(
  state: EditorViewState,
  depths: { revision: number; undo_depth: number; redo_depth: number },
): void {
  state.revision = depths.revision;
  state.undoDepth = depths.undo_depth;
  state.redoDepth = depths.redo_depth;
}

/** Invariant: a selected link must exist in the project or the pending set. */
export function selectedLinkExists(
  state: EditorViewState,
  project: ProjectData,
): boolean {
  if (state.selectedLink === null) return true;
  if (project.links.some((l) => l.link_id === state.selectedLink)) return true;
  if (state.pending !== null) {
    return state.pending.kept.some(
      (kept, index) => kept && pendingLinkId(state.pending!, index) === state.selectedLink,
    );
  }
  return false;
}

export function pendingLinkId(
  pending: PendingSuggestion,
  index: number,
): string {
  return `pending:${pending.srcParaId}:${pending.tgtParaId}:${index}`;
}

export function pendingFromSuggest(
  response: SuggestResponse,
): PendingSuggestion {
  return {
    srcParaId: response.src_para_id,
    tgtParaId: response.tgt_para_id,
    origin: response.origin,
    payload: response.payload,
    kept: response.payload.links.map(() => true),
  };
}

export function rejectPendingLink(
  pending: PendingSuggestion,
  index: number,
): void {
  if (index >= 0 && index < pending.kept.length) {
    pending.kept[index] = false;
  }
}

/**
 * Accept body for the reviewed batch: all sentences, only the kept links.
 * The server applies this as one undoable command, so a single undo
 * reverts the whole acceptance.
 */
export function acceptBody(pending: PendingSuggestion): SuggestionPayload {
  const links: PayloadLink[] = pending.payload.links.filter(
    (_, index) => pending.kept[index],
  );
  return {
    source_sentences: pending.payload.source_sentences,
    target_sentences: pending.payload.target_sentences,
    links,
  };
}

// --- connector derivation ----------------------------------------------------

export interface ConnectorSpec {
  key: string;
  linkId: string | null;
  sourceIds: string[];
  targetIds: string[];
  level: LinkLevel;
  origin: LinkOrigin;
  cardinality: Cardinality;
  pending: boolean;
  selected: boolean;
}

function specFromLink(link: Link, selected: string | null): ConnectorSpec {
  return {
    key: link.link_id,
    linkId: link.link_id,
    sourceIds: link.source_ids,
    targetIds: link.target_ids,
    level: link.level,
    origin: link.origin,
    cardinality: cardinalityOfLink(link),
    pending: false,
    selected: link.link_id === selected,
  };
}

/**
 * One connector per link plus one per kept pending suggestion, in that
 * order. Every connector on screen corresponds 1:1 to an entry here.
 */
export function connectorsFor(
  project: ProjectData,
  state: EditorViewState,
): ConnectorSpec[] {
  const specs = project.links.map((l) => specFromLink(l, state.selectedLink));
  const pending = state.pending;
  if (pending !== null) {
    pending.payload.links.forEach((link, index) => {
      if (!pending.kept[index]) return;
      const key = pendingLinkId(pending, index);
      specs.push({
        key,
        linkId: null,
        sourceIds: link.source_ids,
        targetIds: link.target_ids,
        level: "sentence",
        origin: pending.origin,
        cardinality: cardinalityOfLink(link),
        pending: true,
        selected: key === state.selectedLink,
      });
    });
  }
  return specs;
}
