/**
 * Directionality helpers.
 *
 * Pane direction comes from the document language tag; individual blocks
 * always get dir="auto" so a Latin quote inside an Arabic paragraph (or
 * the reverse) is isolated per block by the browser's bidi algorithm.
 */

const RTL_PRIMARY = new Set([
  "ar", "arc", "ckb", "dv", "fa", "he", "ku", "ps", "sd", "ug", "ur", "yi",
]);

const RTL_SCRIPTS = new Set(["adlm", "arab", "hebr", "nkoo", "syrc", "thaa"]);

export type Direction = "ltr" | "rtl";

/** Direction for a whole pane, from a BCP 47-ish language tag. */
export function paneDirection(langTag: string): Direction {
  const subtags = langTag.toLowerCase().split("-").filter(Boolean);
  const primary = subtags[0] ?? "";
  if (RTL_PRIMARY.has(primary)) {
    return "rtl";
  }
  // An explicit RTL script subtag wins over an unknown primary ("und-Arab").
  for (const sub of subtags.slice(1)) {
    if (sub.length === 4 && RTL_SCRIPTS.has(sub)) {
      return "rtl";
    }
  }
  return "ltr";
}

/** True when the text contains a strong RTL character. */
export function hasStrongRtl(text: string): boolean {
  // Hebrew, Arabic, Syriac, Thaana, supplements and presentation forms.
  return /[֐-ࣿיִ-﷿ﹰ-﻿]/.test(text);
}

/**
 * Wrap text in FIRST STRONG ISOLATE .. POP DIRECTIONAL ISOLATE for plain
 * string contexts (tooltips, list labels) where dir="auto" is unavailable.
 */
export function isolate(text: string): string {
  return `⁨${text}⁩`;
}

/** Attributes every segment block carries. */
export function blockDirAttributes(): { dir: "auto" } {
  return { dir: "auto" };
}
