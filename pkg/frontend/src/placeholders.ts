/**
 * Split a prompt template body into literal and placeholder runs, so the
 * manager can highlight every {{identifier}} occurrence in place.
 */

export interface TemplateRun {
  text: string;
  placeholder: boolean;
}

const PLACEHOLDER = /\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}/g;

export function splitPlaceholders(body: string): TemplateRun[] {
  const runs: TemplateRun[] = [];
  let last = 0;
  for (const match of body.matchAll(PLACEHOLDER)) {
    const index = match.index ?? 0;
    if (index > last) {
      runs.push({ text: body.slice(last, index), placeholder: false });
    }
    runs.push({ text: match[0], placeholder: true });
    last = index + match[0].length;
  }
  if (last < body.length || runs.length === 0) {
    runs.push({ text: body.slice(last), placeholder: false });
  }
  return runs;
}

/** Placeholder names in order of first appearance. */
export function placeholderNames(body: string): string[] {
  const seen = new Set<string>();
  for (const run of splitPlaceholders(body)) {
    if (run.placeholder) {
      seen.add(run.text.slice(2, -2));
    }
  }
  return [...seen];
}
