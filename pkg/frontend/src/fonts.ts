/**
 * Per-pane font preferences.
 *
 * A client-side preference, persisted in browser storage, never in the
 * project store: fonts are about this reader's screen, not the corpus.
 */

export interface PaneFont {
  family: string;
  size: number;
}

export interface PaneFonts {
  source: PaneFont;
  target: PaneFont;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const KEY = "lata-ui.pane-fonts";
const MIN_SIZE = 8;
const MAX_SIZE = 72;

export function defaultFonts(): PaneFonts {
  return {
    source: { family: "Georgia, serif", size: 16 },
    target: { family: "Georgia, serif", size: 16 },
  };
}

export function clampSize(size: number): number {
  if (!Number.isFinite(size)) return defaultFonts().source.size;
  return Math.min(MAX_SIZE, Math.max(MIN_SIZE, Math.round(size)));
}

function sanitizePane(raw: unknown, fallback: PaneFont): PaneFont {
  if (typeof raw !== "object" || raw === null) return { ...fallback };
  const pane = raw as { family?: unknown; size?: unknown };
  return {
    family:
      typeof pane.family === "string" && pane.family.trim()
        ? pane.family
        : fallback.family,
    size: typeof pane.size === "number" ? clampSize(pane.size) : fallback.size,
  };
}

export function loadFonts(storage: StorageLike): PaneFonts {
  const defaults = defaultFonts();
  let raw: string | null = null;
  try {
    raw = storage.getItem(KEY);
  } catch {
    return defaults;
  }
  if (!raw) return defaults;
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return defaults;
  }
  const data = (parsed ?? {}) as { source?: unknown; target?: unknown };
  return {
    source: sanitizePane(data.source, defaults.source),
    target: sanitizePane(data.target, defaults.target),
  };
}

export function saveFonts(storage: StorageLike, fonts: PaneFonts): void {
  try {
    storage.setItem(KEY, JSON.stringify(fonts));
  } catch {
    // Private browsing modes may refuse writes; the preference just
    // will not stick, which is fine.
  }
}
