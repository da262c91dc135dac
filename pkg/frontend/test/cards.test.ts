import { describe, expect, it } from "vitest";

import {
  pathHops,
  renderContributionBars,
  renderPathCard,
} from "../src/cards.js";
import { makePath, rankedFrom } from "./fake_service.js";

const walk = makePath(
  "p1",
  [
    ["ann", "user"],
    ["ben", "user"],
    ["jazz", "track"],
  ],
  [
    ["follows", false],
    ["scrobbles", true],
  ],
);

describe("pathHops", () => {
  it("yields one hop per node, server length plus one", () => {
    const hops = pathHops(walk);
    expect(hops).toHaveLength(walk.length + 1);
    expect(hops.map((h) => h.label)).toEqual(["ann", "ben", "jazz"]);
  });

  it("keeps walk order and drops the arrow on the final hop", () => {
    const hops = pathHops(walk);
    expect(hops[0].arrow).toEqual({ label: "follows", reversed: false });
    expect(hops[2].arrow).toBeNull();
  });

  it("draws an inverted edge as a reversed arrow with the base label", () => {
    const hops = pathHops(walk);
    expect(hops[1].arrow).toEqual({ label: "scrobbles", reversed: true });
  });

  it("rejects a path whose node count disagrees with its length", () => {
    const broken = { ...walk, length: 5 };
    expect(() => pathHops(broken)).toThrowError(/5/);
  });
});

describe("renderPathCard", () => {
  it("renders labels left to right with arrow glyphs", () => {
    const card = renderPathCard(walk);
    const labels = [...card.querySelectorAll(".hop-label")].map(
      (n) => n.textContent,
    );
    expect(labels).toEqual(["ann", "ben", "jazz"]);
    const arrows = [...card.querySelectorAll(".arrow")];
    expect(arrows[0].textContent).toContain("→");
    expect(arrows[1].textContent).toContain("←");
    expect(arrows[1].classList.contains("reversed")).toBe(true);
    expect(arrows[1].textContent).toContain("scrobbles");
  });

  it("wires the select handler to the path id", () => {
    let picked = "";
    const card = renderPathCard(walk, { onSelect: (id) => (picked = id) });
    (card.querySelector("button.pick") as HTMLButtonElement).click();
    expect(picked).toBe("p1");
  });

  it("renders no button when not selectable", () => {
    expect(renderPathCard(walk).querySelector("button.pick")).toBeNull();
  });
});

describe("renderContributionBars", () => {
  it("shows the largest contributions in model feature order", () => {
    const ranked = rankedFrom(walk, 1.5, {
      "user:link_ratio": 0.1,
      "instance:length": -2.0,
      "pattern:frequency": 1.0,
    });
    const bars = renderContributionBars(ranked, 2);
    const names = [...bars.querySelectorAll(".bar-name")].map(
      (n) => n.textContent,
    );
    expect(names).toEqual(["instance:length", "pattern:frequency"]);
  });

  it("scales bar widths by absolute value and marks signs", () => {
    const ranked = rankedFrom(walk, 0, { a: -2.0, b: 1.0 });
    const bars = renderContributionBars(ranked);
    const spans = [...bars.querySelectorAll(".bar")] as HTMLElement[];
    expect(spans[0].className).toContain("negative");
    expect(spans[0].getAttribute("style")).toContain("100.0%");
    expect(spans[1].className).toContain("positive");
    expect(spans[1].getAttribute("style")).toContain("50.0%");
  });
});
