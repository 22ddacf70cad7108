/**
 * Entry point: wires the API client, view state, and DOM together.
 *
 * The server is the single source of truth: every action issues API calls
 * and then re-reads the project, so reloading the page after any action
 * shows exactly the same links. Stale-revision conflicts reload and replay
 * once via ApiClient.withConflictRetry.
 */
import { ApiClient, ApiError, StaleRevisionError } from "./api.js";
import { loadFonts, saveFonts, clampSize } from "./fonts.js";
import {
  acceptBody,
  canRedo,
  canUndo,
  connectorsFor,
  emptySelection,
  initialViewState,
  linkBodyFromSelection,
  pendingFromSuggest,
  rejectPendingLink,
  selectedLinkExists,
  setDepths,
  toggleBlock,
  type Side,
} from "./state.js";
import {
  applyToolbarState,
  byId,
  renderConnectors,
  renderLinkDetails,
  renderMetadataForm,
  renderPane,
  renderSuggestionBar,
  renderTechniquesForm,
  renderTemplatesForm,
} from "./render.js";
import type { LinkLevel, ProjectData } from "./types.js";

const client = new ApiClient("");
const state = initialViewState();
let project: ProjectData | null = null;
let projectRef: string | null = null;

const sourcePane = byId<HTMLElement>("source-pane");
const targetPane = byId<HTMLElement>("target-pane");
const overlay = byId<HTMLElement>("overlay") as unknown as SVGSVGElement;
const suggestionBar = byId<HTMLElement>("suggestion-bar");
const statusLine = byId<HTMLElement>("status");
const undoBtn = byId<HTMLButtonElement>("undo-btn");
const redoBtn = byId<HTMLButtonElement>("redo-btn");
const linkBtn = byId<HTMLButtonElement>("link-btn");
const detailsBtn = byId<HTMLButtonElement>("details-btn");
const suggestBtn = byId<HTMLButtonElement>("suggest-btn");
const exportBtn = byId<HTMLButtonElement>("export-btn");
const levelSelect = byId<HTMLSelectElement>("level-select");
const projectSelect = byId<HTMLSelectElement>("project-select");
const dialog = byId<HTMLDialogElement>("link-details");
const drawer = byId<HTMLElement>("manager-drawer");
const drawerBody = byId<HTMLElement>("drawer-body");

function say(message: string): void {
  statusLine.textContent = message;
}

function fail(error: unknown): void {
  if (error instanceof StaleRevisionError) {
    say(`project changed under you (rev ${error.current}); reloaded`);
  } else if (error instanceof ApiError) {
    say(`${error.code}: ${error.message}`);
  } else {
    say(String(error));
  }
}

async function refresh(): Promise<void> {
  if (projectRef === null) return;
  const envelope = await client.getProject(projectRef);
  project = envelope.project;
  setDepths(state, envelope);
  if (!selectedLinkExists(state, project)) {
    state.selectedLink = null;
  }
  redraw();
}

function redraw(): void {
  if (project === null) return;
  const handlers = {
    onToggle(side: Side, id: string) {
      toggleBlock(state.selection, side, id);
      redraw();
    },
  };
  renderPane(sourcePane, project.source_doc, state.selection, state.paneFonts.source, handlers);
  renderPane(targetPane, project.target_doc, state.selection, state.paneFonts.target, handlers);
  renderConnectors(overlay, connectorsFor(project, state), {
    onSelect(key) {
      state.selectedLink = state.selectedLink === key ? null : key;
      redraw();
    },
  });
  renderSuggestionBar(suggestionBar, state.pending, {
    onReject(index) {
      if (state.pending) {
        rejectPendingLink(state.pending, index);
        redraw();
      }
    },
    onAcceptAll: () => void acceptAll().catch(fail),
    onDiscard() {
      state.pending = null;
      redraw();
    },
  });
  applyToolbarState(state, undoBtn, redoBtn);
  detailsBtn.disabled =
    state.selectedLink === null || state.selectedLink.startsWith("pending:");
  linkBtn.disabled = linkBodyFromSelection(state.selection) === null;
  suggestBtn.disabled = !suggestablePair();
}

function suggestablePair(): { src: string; tgt: string } | null {
  // Suggesting works on exactly one paragraph picked on each side.
  if (state.selection.level !== "paragraph") return null;
  if (state.selection.source.size !== 1 || state.selection.target.size !== 1) {
    return null;
  }
  const src = [...state.selection.source][0];
  const tgt = [...state.selection.target][0];
  if (!src || !tgt) return null;
  return { src, tgt };
}

async function mutateAndRefresh(fn: () => Promise<unknown>): Promise<void> {
  if (projectRef === null) return;
  try {
    await client.withConflictRetry(projectRef, fn);
  } catch (error) {
    fail(error);
  }
  await refresh().catch(fail);
}

async function createLinkFromSelection(): Promise<void> {
  const body = linkBodyFromSelection(state.selection);
  if (body === null || projectRef === null) return;
  await mutateAndRefresh(() => client.addLink(projectRef!, body));
  state.selection = emptySelection(state.selection.level);
  redraw();
}

function openDetails(): void {
  if (project === null || projectRef === null || state.selectedLink === null) {
    return;
  }
  const link = project.links.find((l) => l.link_id === state.selectedLink);
  if (!link) return;
  renderLinkDetails(dialog, link, project.taxonomy, {
    onSave(techniques, comment) {
      void mutateAndRefresh(() =>
        client.patchLink(projectRef!, link.link_id, { techniques, comment }),
      );
    },
    onDelete() {
      void mutateAndRefresh(() => client.deleteLink(projectRef!, link.link_id));
      state.selectedLink = null;
    },
  });
}

async function runSuggest(): Promise<void> {
  const pair = suggestablePair();
  if (pair === null || projectRef === null) return;
  say("asking for a suggestion…");
  try {
    const response = await client.suggest(projectRef, pair.src, pair.tgt);
    state.pending = pendingFromSuggest(response);
    say(
      response.origin === "llm"
        ? `provider suggestion (${response.retry_count} retries)`
        : `offline suggestion (${response.reason || "baseline"})`,
    );
  } catch (error) {
    fail(error);
  }
  redraw();
}

async function acceptAll(): Promise<void> {
  if (state.pending === null || projectRef === null) return;
  const pending = state.pending;
  await mutateAndRefresh(() =>
    client.accept(
      projectRef!,
      pending.srcParaId,
      pending.tgtParaId,
      acceptBody(pending),
      pending.origin,
    ),
  );
  state.pending = null;
  redraw();
}

async function exportProject(): Promise<void> {
  if (projectRef === null) return;
  const bytes = await client.exportBundle(projectRef);
  const blob = new Blob([bytes], { type: "application/zip" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = `${projectRef}.zip`;
  a.click();
  URL.revokeObjectURL(url);
}

function openDrawer(kind: "metadata" | "techniques" | "templates"): void {
  if (project === null || projectRef === null) return;
  drawer.hidden = false;
  if (kind === "metadata") {
    renderMetadataForm(drawerBody, project, (role, meta) => {
      void mutateAndRefresh(() => client.putMetadata(projectRef!, role, meta));
    });
  } else if (kind === "techniques") {
    renderTechniquesForm(drawerBody, project.taxonomy, (taxonomy) => {
      void mutateAndRefresh(() => client.putTechniques(projectRef!, taxonomy));
    });
  } else {
    renderTemplatesForm(drawerBody, project.prompt_templates, (templates) => {
      void mutateAndRefresh(() => client.putTemplates(projectRef!, templates));
    });
  }
}

async function loadProjectList(): Promise<void> {
  const projects = await client.listProjects();
  projectSelect.replaceChildren();
  for (const summary of projects) {
    const option = document.createElement("option");
    option.value = summary.project_id;
    option.textContent = `${summary.name} (${summary.project_id})`;
    projectSelect.appendChild(option);
  }
  if (projects.length > 0 && projectRef === null) {
    projectRef = projects[0]!.project_id;
    projectSelect.value = projectRef;
  }
}

function wireToolbar(): void {
  undoBtn.addEventListener("click", () => {
    if (canUndo(state)) void mutateAndRefresh(() => client.undo(projectRef!));
  });
  redoBtn.addEventListener("click", () => {
    if (canRedo(state)) void mutateAndRefresh(() => client.redo(projectRef!));
  });
  linkBtn.addEventListener("click", () => void createLinkFromSelection());
  detailsBtn.addEventListener("click", openDetails);
  suggestBtn.addEventListener("click", () => void runSuggest());
  exportBtn.addEventListener("click", () => void exportProject().catch(fail));
  levelSelect.addEventListener("change", () => {
    state.selection = emptySelection(levelSelect.value as LinkLevel);
    redraw();
  });
  projectSelect.addEventListener("change", () => {
    projectRef = projectSelect.value;
    state.selection = emptySelection(state.selection.level);
    state.selectedLink = null;
    state.pending = null;
    void refresh().catch(fail);
  });
  byId<HTMLButtonElement>("metadata-btn").addEventListener("click", () =>
    openDrawer("metadata"),
  );
  byId<HTMLButtonElement>("techniques-btn").addEventListener("click", () =>
    openDrawer("techniques"),
  );
  byId<HTMLButtonElement>("templates-btn").addEventListener("click", () =>
    openDrawer("templates"),
  );
  byId<HTMLButtonElement>("drawer-close").addEventListener("click", () => {
    drawer.hidden = true;
  });
  for (const side of ["source", "target"] as const) {
    const family = byId<HTMLInputElement>(`${side}-font-family`);
    const size = byId<HTMLInputElement>(`${side}-font-size`);
    family.value = state.paneFonts[side].family;
    size.value = String(state.paneFonts[side].size);
    const apply = () => {
      state.paneFonts[side] = {
        family: family.value || state.paneFonts[side].family,
        size: clampSize(Number(size.value)),
      };
      saveFonts(localStorage, state.paneFonts);
      redraw();
    };
    family.addEventListener("change", apply);
    size.addEventListener("change", apply);
  }
  window.addEventListener("resize", () => redraw());
}

async function boot(): Promise<void> {
  state.paneFonts = loadFonts(localStorage);
  wireToolbar();
  try {
    await loadProjectList();
    if (projectRef !== null) {
      await refresh();
      say("ready");
    } else {
      say("no projects yet; create one with the CLI or POST /projects");
    }
  } catch (error) {
    fail(error);
  }
}

void boot();
