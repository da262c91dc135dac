import { el } from "./dom.js";
import type { RankedPath, RenderedPath } from "./types.js";

/** One stop on the walk: a node plus the arrow leading to the next
 * node, absent on the final hop. An inverted edge keeps its position
 * in the walk but points backwards under its base label, so the card
 * shows the platform's own edge direction. */
export interface Hop {
  label: string;
  type: string;
  arrow: { label: string; reversed: boolean } | null;
}

export function pathHops(path: RenderedPath): Hop[] {
  if (path.nodes.length !== path.length + 1) {
    throw new Error(
      `path ${path.id}: ${path.nodes.length} nodes for length ${path.length}`,
    );
  }
  return path.nodes.map((node, i) => ({
    label: node.label,
    type: node.type,
    arrow:
      i < path.edges.length
        ? {
            label: path.edges[i].base,
            reversed: path.edges[i].inverted,
          }
        : null,
  }));
}

export interface CardOptions {
  /** Marks the card clickable and wires the handler. */
  onSelect?: (pathId: string) => void;
  /** Caption above the walk, e.g. "A" / "B" in a judging pair. */
  caption?: string;
}

export function renderPathCard(
  path: RenderedPath,
  opts: CardOptions = {},
): HTMLElement {
  const walk = el("div", { className: "walk" });
  for (const hop of pathHops(path)) {
    walk.appendChild(
      el(
        "span",
        { className: "hop", title: hop.type },
        el("span", { className: "hop-label" }, hop.label),
        el("span", { className: "hop-type" }, hop.type),
      ),
    );
    if (hop.arrow) {
      walk.appendChild(
        el(
          "span",
          {
            className: hop.arrow.reversed ? "arrow reversed" : "arrow",
          },
          hop.arrow.reversed ? "←" : "→",
          el("span", { className: "arrow-label" }, hop.arrow.label),
        ),
      );
    }
  }
  const card = el(
    "div",
    { className: "path-card", "data-path-id": path.id },
    opts.caption ? el("div", { className: "caption" }, opts.caption) : null,
    walk,
  );
  if (opts.onSelect) {
    const pick = el(
      "button",
      {
        className: "pick",
        type: "button",
        onclick: () => opts.onSelect!(path.id),
      },
      "this one",
    );
    card.appendChild(pick);
  }
  return card;
}

/** Horizontal signed bars for the largest score contributions. Bars
 * only change scale, never order: features stay in model layout
 * order within the chosen top slice. */
export function renderContributionBars(
  ranked: RankedPath,
  limit = 8,
): HTMLElement {
  const entries = Object.entries(ranked.contributions);
  const top = entries
    .map(([name, value], position) => ({ name, value, position }))
    .sort((a, b) => Math.abs(b.value) - Math.abs(a.value))
    .slice(0, limit)
    .sort((a, b) => a.position - b.position);
  const scale = Math.max(...top.map((e) => Math.abs(e.value)), 1e-12);
  const rows = el("div", { className: "contribution-bars" });
  for (const entry of top) {
    const width = (100 * Math.abs(entry.value)) / scale;
    rows.appendChild(
      el(
        "div",
        { className: "bar-row" },
        el("span", { className: "bar-name" }, entry.name),
        el(
          "span",
          { className: "bar-track" },
          el("span", {
            className: entry.value < 0 ? "bar negative" : "bar positive",
            style: `width:${width.toFixed(1)}%`,
          }),
        ),
        el("span", { className: "bar-value" }, entry.value.toFixed(3)),
      ),
    );
  }
  return rows;
}
