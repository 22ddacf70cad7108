import { describe, expect, it } from "vitest";

import {
  boundingRect,
  connectorClass,
  connectorPath,
  edgeMidpoint,
  nullMarkerPath,
  type Rect,
} from "../src/geometry.js";

const rect = (x: number, y: number, w: number, h: number): Rect => ({
  x,
  y,
  width: w,
  height: h,
});

function numbersIn(path: string): number[] {
  return (path.match(/-?\d+(?:\.\d+)?/g) ?? []).map(Number);
}

describe("boundingRect", () => {
  it("wraps several rects", () => {
    const box = boundingRect([rect(10, 10, 20, 10), rect(0, 40, 5, 5)]);
    expect(box).toEqual({ x: 0, y: 10, width: 30, height: 35 });
  });

  it("is the identity for a single rect", () => {
    expect(boundingRect([rect(3, 4, 5, 6)])).toEqual(rect(3, 4, 5, 6));
  });

  it("rejects an empty list", () => {
    expect(() => boundingRect([])).toThrow(/zero rects/);
  });
});

describe("edgeMidpoint", () => {
  it("finds both vertical edge midpoints", () => {
    const r = rect(10, 20, 40, 10);
    expect(edgeMidpoint(r, "left")).toEqual({ x: 10, y: 25 });
    expect(edgeMidpoint(r, "right")).toEqual({ x: 50, y: 25 });
  });
});

describe("connectorPath", () => {
  it("runs from the right edge of the left block to the left edge of the right block", () => {
    const path = connectorPath(rect(0, 0, 100, 20), rect(300, 60, 100, 20));
    const nums = numbersIn(path);
    // M startX startY C c1x c1y, c2x c2y, endX endY
    expect(nums[0]).toBe(100);
    expect(nums[1]).toBe(10);
    expect(nums[6]).toBe(300);
    expect(nums[7]).toBe(70);
    expect(path.startsWith("M ")).toBe(true);
    expect(path).toContain("C ");
  });

  it("uses the opposite edges when the target sits to the left", () => {
    const path = connectorPath(rect(300, 0, 100, 20), rect(0, 0, 100, 20));
    const nums = numbersIn(path);
    expect(nums[0]).toBe(300); // left edge of the right-hand block
    expect(nums[6]).toBe(100); // right edge of the left-hand block
  });

  it("keeps a minimum horizontal pull for near-overlapping blocks", () => {
    const path = connectorPath(rect(0, 0, 10, 10), rect(12, 40, 10, 10));
    const nums = numbersIn(path);
    const startX = nums[0]!;
    const c1x = nums[2]!;
    expect(Math.abs(c1x - startX)).toBeGreaterThanOrEqual(12);
  });

  it("control points stay level with their endpoints", () => {
    const path = connectorPath(rect(0, 0, 100, 20), rect(300, 60, 100, 20));
    const nums = numbersIn(path);
    expect(nums[3]).toBe(nums[1]); // c1y == startY
    expect(nums[5]).toBe(nums[7]); // c2y == endY
  });
});

describe("nullMarkerPath", () => {
  it("stubs rightward with a terminal bar", () => {
    const path = nullMarkerPath(rect(0, 0, 100, 20), "right");
    const nums = numbersIn(path);
    expect(nums[0]).toBe(100);
    expect(nums[2]).toBe(118); // default stub length 18
    // two M segments: stub then bar
    expect(path.split("M ").length - 1).toBe(2);
  });

  it("stubs leftward from the left edge", () => {
    const path = nullMarkerPath(rect(50, 0, 100, 20), "left");
    const nums = numbersIn(path);
    expect(nums[0]).toBe(50);
    expect(nums[2]).toBe(32);
  });
});

describe("connectorClass", () => {
  it("styles by origin and cardinality", () => {
    const cls = connectorClass({
      origin: "llm",
      cardinality: "M:N",
      pending: true,
      selected: false,
    });
    expect(cls.split(" ")).toEqual([
      "connector",
      "origin-llm",
      "card-m-n",
      "pending",
    ]);
  });

  it("marks selection", () => {
    const cls = connectorClass({
      origin: "manual",
      cardinality: "1:1",
      pending: false,
      selected: true,
    });
    expect(cls).toBe("connector origin-manual card-1-1 selected");
  });
});
