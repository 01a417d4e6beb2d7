// Pure HTML builders: ViewState in, markup out. No fetching, no state, and
// no arithmetic on metrics — numbers are formatted from single API fields.

import type { EvidenceEntry, ViewState } from "./state.js";
import type {
  GridPayload,
  MetricsEnvelope,
  PromptEntryPayload,
  PromptListing,
  QueueSort,
  ReviewItemPayload,
  Verdict,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const esc = escapeHtml;

function fmt(value: number, digits = 2): string {
  return value.toFixed(digits);
}

// visual scaling of one relevance field onto a 0–100% bar width
function relevanceBar(relevance: number): string {
  const width = Math.max(0, Math.min(100, Math.round(relevance * 100)));
  return (
    `<span class="bar" title="${fmt(relevance, 3)}">` +
    `<span class="bar-fill" style="width:${width}%"></span></span>`
  );
}

function verdictBadge(verdict: Verdict | string): string {
  return `<span class="badge verdict-${esc(String(verdict))}">${esc(String(verdict))}</span>`;
}

export function renderBanner(state: ViewState): string {
  if (!state.banner) return "";
  const retry = state.banner.canRetry
    ? '<button class="retry" data-action="retry">Retry</button>'
    : "";
  return `<div class="banner" role="alert">${esc(state.banner.message)}${retry}</div>`;
}

function renderHeader(state: ViewState): string {
  const enhanceDisabled = state.busy.enhance || state.phase !== "ready";
  return `
  <header class="topbar">
    <div class="brand">weakaudit <span>review</span></div>
    <div class="topbar-controls">
      <label class="reviewer-label">reviewer
        <input id="reviewer-input" type="text" placeholder="your name"
               value="${esc(state.reviewer)}">
      </label>
      <button class="primary" data-action="enhance" ${enhanceDisabled ? "disabled" : ""}>
        ${state.busy.enhance ? "Enhancing…" : "Run enhance"}
      </button>
    </div>
  </header>`;
}

export function renderMetricsPanel(
  metrics: MetricsEnvelope | null,
  state: ViewState,
): string {
  if (!metrics) return "";
  const before = metrics.before;
  const after = metrics.after;
  const accuracy = after
    ? `${fmt(before.overall_accuracy)}% &rarr; ${fmt(after.overall_accuracy)}%`
    : `${fmt(before.overall_accuracy)}%`;
  const rows = (metrics.disparity_reductions ?? []).map(
    (entry) => `
      <tr>
        <td>${esc(entry.attribute)} (${esc(entry.group_a)} vs ${esc(entry.group_b)})</td>
        <td class="num">${fmt(entry.before)} pts</td>
        <td class="num">${fmt(entry.after)} pts</td>
        <td class="num">${entry.reduction === null ? "n/a" : `${fmt(entry.reduction)}%`}</td>
      </tr>`,
  );
  const beforeOnlyRows =
    metrics.disparity_reductions === null
      ? metrics.before_disparities.map(
          (entry) => `
      <tr>
        <td>${esc(entry.attribute)} (${esc(entry.group_a)} vs ${esc(entry.group_b)})</td>
        <td class="num">${fmt(entry.disparity)} pts</td>
        <td class="num">&mdash;</td>
        <td class="num">&mdash;</td>
      </tr>`,
        )
      : [];
  const enhance = state.report?.enhance ?? null;
  const procurementNote = enhance
    ? `<p class="note">weakspots ${enhance.weakspot_count_before} &rarr; ` +
      `${enhance.weakspot_count_after}; added ${enhance.procurement.added_count} samples` +
      (enhance.procurement.augmentation_fraction === null
        ? ""
        : ` (${fmt(enhance.procurement.augmentation_fraction)}% of training data)`) +
      `</p>`
    : "";
  return `
  <section class="panel" id="metrics-panel">
    <h2>Model metrics</h2>
    <p class="headline">overall accuracy: <strong>${accuracy}</strong></p>
    <table>
      <thead><tr><th>disparity</th><th>before</th><th>after</th><th>reduction</th></tr></thead>
      <tbody>${[...rows, ...beforeOnlyRows].join("") || '<tr><td colspan="4" class="empty">no disparity pairs configured</td></tr>'}</tbody>
    </table>
    ${procurementNote}
  </section>`;
}

function sortHeader(label: string, key: QueueSort, active: QueueSort): string {
  const marker = key === active ? " &darr;" : "";
  return (
    `<th><button class="sort ${key === active ? "active" : ""}" ` +
    `data-action="sort" data-sort="${key}">${esc(label)}${marker}</button></th>`
  );
}

export function renderQueuePanel(state: ViewState): string {
  const rows = state.queue.map((item) => {
    const selected =
      state.selected &&
      state.selected.key[0] === item.key[0] &&
      state.selected.key[1] === item.key[1];
    return `
      <tr class="queue-row ${selected ? "selected" : ""}" data-action="select"
          data-object="${esc(item.key[0])}" data-class="${esc(item.key[1])}">
        <td>${esc(item.association.object_label)}</td>
        <td>${esc(item.association.predicted_class)}</td>
        <td class="num">${item.association.support}</td>
        <td>${relevanceBar(item.association.mean_relevance)}</td>
        <td>${verdictBadge(item.verdict)}</td>
      </tr>`;
  });
  return `
  <section class="panel" id="queue-panel">
    <h2>Association queue</h2>
    <table>
      <thead>
        <tr>
          <th>object</th>
          <th>predicted class</th>
          ${sortHeader("support", "support", state.sort)}
          ${sortHeader("relevance", "relevance", state.sort)}
          ${sortHeader("verdict", "verdict", state.sort)}
        </tr>
      </thead>
      <tbody>${rows.join("") || '<tr><td colspan="5" class="empty">nothing shortlisted for review</td></tr>'}</tbody>
    </table>
  </section>`;
}

function mitigationPreview(
  prompts: PromptListing | null,
  item: ReviewItemPayload,
): string {
  if (!prompts) return "";
  const entries = prompts.entries.filter(
    (entry) =>
      entry.purpose === "mitigation" &&
      entry.target_class === item.key[1] &&
      entry.tags.includes(item.key[0]),
  );
  if (item.verdict !== "spurious") {
    return '<p class="note">mark spurious to add mitigation prompts for this pair</p>';
  }
  if (entries.length === 0) {
    return '<p class="note">no mitigation prompts for this pair yet</p>';
  }
  const lines = entries.map(
    (entry) => `<li><code>${esc(entry.text)}</code></li>`,
  );
  return `<h3>Prompt preview</h3><ul class="prompt-list">${lines.join("")}</ul>`;
}

function renderEvidence(entries: EvidenceEntry[], loading: boolean): string {
  if (loading) return '<p class="note">loading evidence…</p>';
  if (entries.length === 0) return "";
  const items = entries.map((entry) => {
    if (!entry.record && !entry.weakspot) {
      return `<li><code>${esc(entry.id)}</code> <span class="muted">(no detail available)</span></li>`;
    }
    const record = entry.record;
    const caption = record?.caption
      ? `<div class="caption">${esc(record.caption)}</div>`
      : "";
    const attributes = record
      ? Object.entries(record.attributes)
          .map(([name, value]) => `<span class="chip">${esc(name)}: ${esc(value)}</span>`)
          .join("")
      : "";
    const imageRef = record?.attributes["image_ref"]
      ? `<a href="${esc(record.attributes["image_ref"])}" target="_blank" rel="noopener">image</a>`
      : "";
    const objects = record?.objects
      ? record.objects
          .map((tag) => `<span class="chip">${esc(tag.label)} ${relevanceBar(tag.relevance)}</span>`)
          .join("")
      : "";
    const weakspotNote = entry.weakspot
      ? `<div class="muted">weakspot: ${esc(entry.weakspot.true_class)} predicted as ` +
        `${esc(entry.weakspot.predicted_class)}, perplexity ${fmt(entry.weakspot.perplexity, 3)}</div>`
      : "";
    return `
      <li>
        <code>${esc(entry.id)}</code> ${imageRef}
        ${caption}
        <div class="chips">${attributes}${objects}</div>
        ${weakspotNote}
      </li>`;
  });
  return `<h3>Evidence</h3><ul class="evidence-list">${items.join("")}</ul>`;
}

export function renderDetailPanel(state: ViewState): string {
  const item = state.selected;
  if (!item) {
    return `
  <section class="panel" id="detail-panel">
    <h2>Association detail</h2>
    <p class="empty">select a queue row to review it</p>
  </section>`;
  }
  const disabled = state.busy.verdict ? "disabled" : "";
  const buttons = (["spurious", "benign", "pending"] as Verdict[])
    .map(
      (verdict) =>
        `<button class="verdict-button ${verdict === item.verdict ? "active" : ""}"
                 data-action="verdict" data-object="${esc(item.key[0])}"
                 data-class="${esc(item.key[1])}" data-verdict="${verdict}"
                 ${disabled}>${verdict}</button>`,
    )
    .join("");
  const history = item.history
    .map(
      (entry) =>
        `<li>${verdictBadge(entry.verdict)} by ${esc(entry.reviewer)} ` +
        `<span class="muted">${esc(entry.timestamp)}</span></li>`,
    )
    .join("");
  return `
  <section class="panel" id="detail-panel">
    <h2>Association detail</h2>
    <p class="headline"><strong>${esc(item.key[0])}</strong> &harr;
       <strong>${esc(item.key[1])}</strong> ${verdictBadge(item.verdict)}</p>
    <p>support ${item.association.support}, mean relevance
       ${relevanceBar(item.association.mean_relevance)}</p>
    <div class="verdict-buttons">${buttons}</div>
    ${history ? `<h3>History</h3><ul class="history-list">${history}</ul>` : ""}
    ${renderEvidence(state.evidence, state.evidenceLoading)}
    ${mitigationPreview(state.prompts, item)}
  </section>`;
}

function gridTable(grid: GridPayload): string {
  const rows = grid.rows.map(
    (row) => `
      <tr>
        <td class="num">${row.radius}</td>
        <td class="num">${row.perplexity_threshold}</td>
        <td class="num">${row.weakspot_count}</td>
      </tr>`,
  );
  return `
    <table>
      <thead><tr><th>radius</th><th>threshold</th><th>weakspots</th></tr></thead>
      <tbody>${rows.join("") || '<tr><td colspan="3" class="empty">no radius sweep configured</td></tr>'}</tbody>
    </table>`;
}

export function renderWeakspotPanel(state: ViewState): string {
  const audit = state.report?.audit ?? null;
  if (!audit) {
    return `
  <section class="panel" id="weakspot-panel">
    <h2>Weakspots</h2>
    <p class="empty">no audit report yet — run an audit first</p>
  </section>`;
  }
  const classes = audit.baseline_metrics.class_labels;
  const options = (current: string | undefined) =>
    ['<option value="">any</option>']
      .concat(
        classes.map(
          (label) =>
            `<option value="${esc(label)}" ${label === current ? "selected" : ""}>${esc(label)}</option>`,
        ),
      )
      .join("");
  const listing = state.weakspotListing;
  const listingRows = listing
    ? listing.weakspots.map(
        (spot) => `
      <tr>
        <td><code>${esc(spot.pivotal_id)}</code></td>
        <td>${esc(spot.true_class)} &rarr; ${esc(spot.predicted_class)}</td>
        <td class="num">${fmt(spot.perplexity, 3)}</td>
        <td class="num">${spot.neighbor_ids.length}</td>
      </tr>`,
      )
    : [];
  const listingBlock = listing
    ? `
    <p class="note">${listing.count} weakspot(s) at radius ${listing.radius},
       threshold ${listing.perplexity_threshold}</p>
    <table>
      <thead><tr><th>pivotal</th><th>true &rarr; predicted</th><th>perplexity</th><th>neighbors</th></tr></thead>
      <tbody>${listingRows.join("") || '<tr><td colspan="4" class="empty">no weakspots match</td></tr>'}</tbody>
    </table>`
    : '<p class="empty">no grid row matches the requested filters</p>';

  const enhanceReport = state.report?.enhance ?? null;
  const grid =
    enhanceReport && state.gridView === "after"
      ? enhanceReport.grid_after
      : (enhanceReport?.grid_before ?? audit.grid);
  const toggle = enhanceReport
    ? `
    <div class="toggle">
      <button class="${state.gridView === "before" ? "active" : ""}"
              data-action="grid-view" data-view="before">before</button>
      <button class="${state.gridView === "after" ? "active" : ""}"
              data-action="grid-view" data-view="after">after</button>
    </div>`
    : "";
  return `
  <section class="panel" id="weakspot-panel">
    <h2>Weakspots</h2>
    <form class="filters" data-role="weakspot-filters">
      <label>d <input id="filter-d" type="number" step="any"
                      value="${state.filters.d ?? ""}"></label>
      <label>t<sub>perp</sub> <input id="filter-tperp" type="number" step="any"
                      value="${state.filters.tperp ?? ""}"></label>
      <label>true <select id="filter-true-class">${options(state.filters.trueClass)}</select></label>
      <label>predicted <select id="filter-predicted-class">${options(state.filters.predictedClass)}</select></label>
      <button data-action="apply-filters">Apply</button>
      <button data-action="reset-filters">Reset</button>
    </form>
    ${listingBlock}
    <h3>Radius sweep ${toggle}</h3>
    ${gridTable(grid)}
  </section>`;
}

function promptLine(entry: PromptEntryPayload): string {
  const pivotal = entry.pivotal_id
    ? `<span class="muted">pivot ${esc(entry.pivotal_id)}</span>`
    : "";
  const tags = entry.tags.map((tag) => `<span class="chip">${esc(tag)}</span>`).join("");
  return `
    <li>
      <code>${esc(entry.text)}</code>
      <span class="badge purpose-${esc(entry.purpose)}">${esc(entry.purpose)}</span>
      <span class="muted">&rarr; ${esc(entry.target_class)}</span>
      ${pivotal} ${tags}
    </li>`;
}

export function renderPromptsPanel(prompts: PromptListing | null): string {
  if (!prompts) return "";
  const skipped =
    prompts.skipped_missing_caption > 0
      ? `<p class="note">${prompts.skipped_missing_caption} weakspot(s) skipped for missing captions</p>`
      : "";
  return `
  <section class="panel" id="prompts-panel">
    <h2>Procurement prompts (${prompts.count})</h2>
    ${skipped}
    <ul class="prompt-list">${prompts.entries.map(promptLine).join("") || '<li class="empty">no prompts yet</li>'}</ul>
  </section>`;
}

export function renderApp(state: ViewState): string {
  if (state.phase === "loading") {
    return `${renderBanner(state)}${renderHeader(state)}<main><p class="empty">loading…</p></main>`;
  }
  if (state.phase === "unavailable") {
    return (
      `${renderBanner(state)}${renderHeader(state)}` +
      `<main><p class="empty">no audit available — start the service over a completed audit run</p></main>`
    );
  }
  return `
  ${renderBanner(state)}
  ${renderHeader(state)}
  <main class="grid">
    ${renderMetricsPanel(state.metrics, state)}
    <div class="columns">
      ${renderQueuePanel(state)}
      ${renderDetailPanel(state)}
    </div>
    ${renderWeakspotPanel(state)}
    ${renderPromptsPanel(state.prompts)}
  </main>`;
}
