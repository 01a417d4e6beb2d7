// Browser entry point: wires the store to the DOM with event delegation.
// All behavior lives in state.ts; all markup in render.ts.

import { ReviewApi } from "./api.js";
import { ReviewStore } from "./state.js";
import { renderApp } from "./render.js";
import type { QueueSort, Verdict, WeakspotFilters } from "./types.js";

function apiBase(): string {
  const meta = document.querySelector('meta[name="weakaudit-api-base"]');
  return meta?.getAttribute("content") ?? "";
}

function inputValue(id: string): string {
  const element = document.getElementById(id);
  return element instanceof HTMLInputElement || element instanceof HTMLSelectElement
    ? element.value.trim()
    : "";
}

function readFilters(): WeakspotFilters {
  const filters: WeakspotFilters = {};
  const d = inputValue("filter-d");
  const tperp = inputValue("filter-tperp");
  const trueClass = inputValue("filter-true-class");
  const predictedClass = inputValue("filter-predicted-class");
  if (d !== "") filters.d = Number(d);
  if (tperp !== "") filters.tperp = Number(tperp);
  if (trueClass !== "") filters.trueClass = trueClass;
  if (predictedClass !== "") filters.predictedClass = predictedClass;
  return filters;
}

function main(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  const api = new ReviewApi(apiBase());
  const store = new ReviewStore(api);

  store.subscribe(() => {
    // preserve reviewer-input focus across re-renders
    const focused = document.activeElement?.id === "reviewer-input";
    const caret =
      focused && document.activeElement instanceof HTMLInputElement
        ? document.activeElement.selectionStart
        : null;
    root.innerHTML = renderApp(store.getState());
    if (focused) {
      const input = document.getElementById("reviewer-input");
      if (input instanceof HTMLInputElement) {
        input.focus();
        if (caret !== null) input.setSelectionRange(caret, caret);
      }
    }
  });

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    event.preventDefault();
    const action = target.dataset["action"];
    switch (action) {
      case "retry":
        void store.retry();
        break;
      case "enhance":
        void store.runEnhance();
        break;
      case "sort":
        store.setSort(target.dataset["sort"] as QueueSort);
        break;
      case "select":
        void store.select(target.dataset["object"] ?? "", target.dataset["class"] ?? "");
        break;
      case "verdict":
        void store.applyVerdict(
          target.dataset["object"] ?? "",
          target.dataset["class"] ?? "",
          target.dataset["verdict"] as Verdict,
        );
        break;
      case "grid-view":
        store.setGridView(target.dataset["view"] === "after" ? "after" : "before");
        break;
      case "apply-filters":
        void store.applyWeakspotFilters(readFilters());
        break;
      case "reset-filters":
        void store.applyWeakspotFilters({});
        break;
      default:
        break;
    }
  });

  root.addEventListener("change", (event) => {
    const target = event.target;
    if (target instanceof HTMLInputElement && target.id === "reviewer-input") {
      store.setReviewer(target.value);
    }
  });

  void store.initialize();
}

main();
