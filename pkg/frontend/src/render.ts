/**
 * DOM layer: builds panes, connectors, the link-details modal, the
 * suggestion review bar, and the manager drawer. All nodes are created
 * with document.createElement; segment text is never assigned through
 * innerHTML.
 */
import { blockDirAttributes, paneDirection } from "./bidi.js";
import type { PaneFont } from "./fonts.js";
import {
  boundingRect,
  connectorClass,
  connectorPath,
  nullMarkerPath,
  type Rect,
} from "./geometry.js";
import { splitPlaceholders } from "./placeholders.js";
import type {
  ConnectorSpec,
  EditorViewState,
  Selection,
  Side,
} from "./state.js";
import type {
  Doc,
  Link,
  Paragraph,
  ProjectData,
  PromptTemplate,
  TechniqueDef,
} from "./types.js";

export function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`missing required element #${id}`);
  }
  return element as T;
}

export interface PaneHandlers {
  onToggle(side: Side, id: string): void;
}

function blockEl(
  side: Side,
  id: string,
  text: string,
  kind: "para" | "sent",
  selection: Selection,
  handlers: PaneHandlers,
): HTMLElement {
  const el = document.createElement(kind === "para" ? "div" : "span");
  el.className = `block ${kind}`;
  el.dataset.side = side;
  el.dataset.id = id;
  el.setAttribute("dir", blockDirAttributes().dir);
  el.textContent = text;
  if (selection[side].has(id)) {
    el.classList.add("picked");
  }
  el.addEventListener("click", (event) => {
    event.stopPropagation();
    handlers.onToggle(side, id);
  });
  return el;
}

function paragraphEl(
  side: Side,
  para: Paragraph,
  selection: Selection,
  handlers: PaneHandlers,
): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "para-wrap";
  if (selection.level === "sentence" && para.sentences.length > 0) {
    const shell = document.createElement("div");
    shell.className = "block-shell";
    shell.dataset.id = para.para_id;
    for (const sent of para.sentences) {
      shell.appendChild(
        blockEl(side, sent.sent_id, sent.text, "sent", selection, handlers),
      );
      shell.appendChild(document.createTextNode(" "));
    }
    wrap.appendChild(shell);
  } else {
    wrap.appendChild(
      blockEl(side, para.para_id, para.raw_text, "para", selection, handlers),
    );
  }
  return wrap;
}

export function renderPane(
  container: HTMLElement,
  doc: Doc,
  selection: Selection,
  font: PaneFont,
  handlers: PaneHandlers,
): void {
  container.replaceChildren();
  container.setAttribute("dir", paneDirection(doc.meta.language));
  container.style.fontFamily = font.family;
  container.style.fontSize = `${font.size}px`;
  for (const para of doc.paragraphs) {
    container.appendChild(
      paragraphEl(doc.role, para, selection, handlers),
    );
  }
  if (doc.paragraphs.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-note";
    empty.textContent = `no ${doc.role} document imported yet`;
    container.appendChild(empty);
  }
}

export interface ConnectorHandlers {
  onSelect(key: string): void;
}

/** Rects of the blocks with these ids, in overlay coordinates. */
function blockRects(overlay: SVGSVGElement, side: Side, ids: string[]): Rect[] {
  const base = overlay.getBoundingClientRect();
  const rects: Rect[] = [];
  for (const id of ids) {
    const el = document.querySelector<HTMLElement>(
      `[data-side="${side}"][data-id="${CSS.escape(id)}"]`,
    );
    if (!el) continue;
    const r = el.getBoundingClientRect();
    rects.push({
      x: r.left - base.left,
      y: r.top - base.top,
      width: r.width,
      height: r.height,
    });
  }
  return rects;
}

export function renderConnectors(
  overlay: SVGSVGElement,
  specs: ConnectorSpec[],
  handlers: ConnectorHandlers,
): void {
  overlay.replaceChildren();
  for (const spec of specs) {
    const src = blockRects(overlay, "source", spec.sourceIds);
    const tgt = blockRects(overlay, "target", spec.targetIds);
    let d: string;
    if (src.length > 0 && tgt.length > 0) {
      d = connectorPath(boundingRect(src), boundingRect(tgt));
    } else if (src.length > 0) {
      d = nullMarkerPath(boundingRect(src), "right");
    } else if (tgt.length > 0) {
      d = nullMarkerPath(boundingRect(tgt), "left");
    } else {
      continue;
    }
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", d);
    path.setAttribute("class", connectorClass(spec));
    path.dataset.key = spec.key;
    path.addEventListener("click", (event) => {
      event.stopPropagation();
      handlers.onSelect(spec.key);
    });
    overlay.appendChild(path);
  }
}

export interface LinkDetailsHandlers {
  onSave(techniques: string[], comment: string): void;
  onDelete(): void;
}

export function renderLinkDetails(
  dialog: HTMLDialogElement,
  link: Link,
  taxonomy: TechniqueDef[],
  handlers: LinkDetailsHandlers,
): void {
  dialog.replaceChildren();
  const title = document.createElement("h2");
  title.textContent = `Link ${link.link_id} (${link.level}, ${link.origin})`;
  dialog.appendChild(title);

  const pair = document.createElement("p");
  pair.className = "link-pair";
  pair.textContent = `${link.source_ids.join(" ")} ↔ ${link.target_ids.join(" ")}`;
  dialog.appendChild(pair);

  const list = document.createElement("div");
  list.className = "technique-list";
  const boxes: HTMLInputElement[] = [];
  for (const tech of taxonomy) {
    const row = document.createElement("label");
    row.className = "technique-row";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = tech.name;
    box.checked = link.techniques.includes(tech.name);
    boxes.push(box);
    const name = document.createElement("span");
    name.textContent = tech.name;
    name.title = tech.description;
    row.append(box, name);
    list.appendChild(row);
  }
  if (taxonomy.length === 0) {
    const hint = document.createElement("p");
    hint.className = "empty-note";
    hint.textContent = "no techniques defined; add some in the manager";
    list.appendChild(hint);
  }
  dialog.appendChild(list);

  const comment = document.createElement("textarea");
  comment.className = "comment-box";
  comment.placeholder = "comment";
  comment.value = link.comment;
  dialog.appendChild(comment);

  const row = document.createElement("div");
  row.className = "button-row";
  const save = document.createElement("button");
  save.textContent = "Save";
  save.addEventListener("click", () => {
    const picked = boxes.filter((b) => b.checked).map((b) => b.value);
    handlers.onSave(picked, comment.value);
    dialog.close();
  });
  const del = document.createElement("button");
  del.textContent = "Delete link";
  del.className = "danger";
  del.addEventListener("click", () => {
    handlers.onDelete();
    dialog.close();
  });
  const cancel = document.createElement("button");
  cancel.textContent = "Cancel";
  cancel.addEventListener("click", () => dialog.close());
  row.append(save, del, cancel);
  dialog.appendChild(row);
  dialog.showModal();
}

export interface SuggestionHandlers {
  onReject(index: number): void;
  onAcceptAll(): void;
  onDiscard(): void;
}

export function renderSuggestionBar(
  container: HTMLElement,
  pending: {
    origin: string;
    payload: { links: { source_ids: string[]; target_ids: string[] }[] };
    kept: boolean[];
  } | null,
  handlers: SuggestionHandlers,
): void {
  container.replaceChildren();
  if (pending === null) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  const head = document.createElement("span");
  const keptCount = pending.kept.filter(Boolean).length;
  head.textContent = `${keptCount} suggested link(s) [${pending.origin}]`;
  container.appendChild(head);
  pending.payload.links.forEach((link, index) => {
    if (!pending.kept[index]) return;
    const chip = document.createElement("span");
    chip.className = "suggest-chip";
    chip.textContent = `${link.source_ids.join("+")}→${link.target_ids.join("+")}`;
    const reject = document.createElement("button");
    reject.textContent = "×";
    reject.title = "reject this link";
    reject.addEventListener("click", () => handlers.onReject(index));
    chip.appendChild(reject);
    container.appendChild(chip);
  });
  const acceptAll = document.createElement("button");
  acceptAll.textContent = "Accept all";
  acceptAll.addEventListener("click", () => handlers.onAcceptAll());
  const discard = document.createElement("button");
  discard.textContent = "Discard";
  discard.addEventListener("click", () => handlers.onDiscard());
  container.append(acceptAll, discard);
}

export function applyToolbarState(
  state: EditorViewState,
  undoBtn: HTMLButtonElement,
  redoBtn: HTMLButtonElement,
): void {
  // Enabled exactly when the server-side stacks are non-empty.
  undoBtn.disabled = state.undoDepth === 0;
  redoBtn.disabled = state.redoDepth === 0;
}

// --- manager drawer -----------------------------------------------------------

function fieldRow(
  label: string,
  value: string,
  onInput: (value: string) => void,
): HTMLElement {
  const row = document.createElement("label");
  row.className = "field-row";
  const span = document.createElement("span");
  span.textContent = label;
  const input = document.createElement("input");
  input.value = value;
  input.addEventListener("input", () => onInput(input.value));
  row.append(span, input);
  return row;
}

const META_FIELDS = [
  "title",
  "author",
  "genre",
  "publication_date",
  "publisher",
  "domain",
  "document_type",
  "language",
  "source_url",
] as const;

export function renderMetadataForm(
  container: HTMLElement,
  project: ProjectData,
  onSave: (role: Side, meta: Record<string, string>) => void,
): void {
  container.replaceChildren();
  for (const doc of [project.source_doc, project.target_doc]) {
    const column = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = doc.role;
    column.appendChild(legend);
    const draft: Record<string, string> = { ...doc.meta };
    for (const field of META_FIELDS) {
      column.appendChild(
        fieldRow(field.replace("_", " "), doc.meta[field], (v) => {
          draft[field] = v;
        }),
      );
    }
    const save = document.createElement("button");
    save.textContent = `Save ${doc.role} metadata`;
    save.addEventListener("click", () => onSave(doc.role, draft));
    column.appendChild(save);
    container.appendChild(column);
  }
}

export function renderTechniquesForm(
  container: HTMLElement,
  taxonomy: TechniqueDef[],
  onSave: (taxonomy: TechniqueDef[]) => void,
): void {
  container.replaceChildren();
  const draft: TechniqueDef[] = taxonomy.map((t) => ({
    ...t,
    examples: [...t.examples],
  }));

  const listEl = document.createElement("div");

  const redraw = () => {
    listEl.replaceChildren();
    draft.forEach((tech, index) => {
      const row = document.createElement("div");
      row.className = "manager-row";
      row.appendChild(fieldRow("name", tech.name, (v) => (tech.name = v)));
      row.appendChild(
        fieldRow("description", tech.description, (v) => (tech.description = v)),
      );
      const examples = document.createElement("textarea");
      examples.placeholder = "one example per line";
      examples.value = tech.examples.join("\n");
      examples.addEventListener("input", () => {
        tech.examples = examples.value.split("\n").filter((x) => x.trim());
      });
      row.appendChild(examples);
      const remove = document.createElement("button");
      remove.textContent = "Remove";
      remove.className = "danger";
      remove.addEventListener("click", () => {
        draft.splice(index, 1);
        redraw();
      });
      row.appendChild(remove);
      listEl.appendChild(row);
    });
  };
  redraw();
  container.appendChild(listEl);

  const add = document.createElement("button");
  add.textContent = "Add technique";
  add.addEventListener("click", () => {
    draft.push({ name: "", description: "", examples: [] });
    redraw();
  });
  const save = document.createElement("button");
  save.textContent = "Save taxonomy";
  save.addEventListener("click", () =>
    onSave(draft.filter((t) => t.name.trim())),
  );
  const buttons = document.createElement("div");
  buttons.className = "button-row";
  buttons.append(add, save);
  container.appendChild(buttons);
}

function highlightedBody(body: string): HTMLElement {
  const view = document.createElement("pre");
  view.className = "template-preview";
  for (const run of splitPlaceholders(body)) {
    if (run.placeholder) {
      const mark = document.createElement("mark");
      mark.className = "placeholder";
      mark.textContent = run.text;
      view.appendChild(mark);
    } else {
      view.appendChild(document.createTextNode(run.text));
    }
  }
  return view;
}

export function renderTemplatesForm(
  container: HTMLElement,
  templates: PromptTemplate[],
  onSave: (templates: PromptTemplate[]) => void,
): void {
  container.replaceChildren();
  const draft: PromptTemplate[] = templates.map((t) => ({
    ...t,
    required_placeholders: [...t.required_placeholders],
  }));

  const listEl = document.createElement("div");
  const redraw = () => {
    listEl.replaceChildren();
    draft.forEach((tpl, index) => {
      const row = document.createElement("div");
      row.className = "manager-row";
      row.appendChild(fieldRow("id", tpl.template_id, (v) => (tpl.template_id = v)));
      row.appendChild(fieldRow("name", tpl.name, (v) => (tpl.name = v)));
      const body = document.createElement("textarea");
      body.value = tpl.body;
      const preview = highlightedBody(tpl.body);
      body.addEventListener("input", () => {
        tpl.body = body.value;
        preview.replaceWith(highlightedBody(tpl.body));
      });
      row.append(body, preview);
      const remove = document.createElement("button");
      remove.textContent = "Remove";
      remove.className = "danger";
      remove.addEventListener("click", () => {
        draft.splice(index, 1);
        redraw();
      });
      row.appendChild(remove);
      listEl.appendChild(row);
    });
  };
  redraw();
  container.appendChild(listEl);

  const add = document.createElement("button");
  add.textContent = "Add template";
  add.addEventListener("click", () => {
    draft.push({
      template_id: `tpl${draft.length + 1}`,
      name: "",
      body: "Segment and align {{paragraph}} ({{language}}).",
      required_placeholders: ["language", "paragraph"],
      description: "",
    });
    redraw();
  });
  const save = document.createElement("button");
  save.textContent = "Save templates";
  save.addEventListener("click", () =>
    onSave(draft.filter((t) => t.template_id.trim())),
  );
  const buttons = document.createElement("div");
  buttons.className = "button-row";
  buttons.append(add, save);
  container.appendChild(buttons);
}
