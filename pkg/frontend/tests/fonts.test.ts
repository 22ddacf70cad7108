import { describe, expect, it } from "vitest";

import {
  clampSize,
  defaultFonts,
  loadFonts,
  saveFonts,
  type StorageLike,
} from "../src/fonts.js";

function memoryStorage(initial?: Record<string, string>): StorageLike & {
  data: Map<string, string>;
} {
  const data = new Map(Object.entries(initial ?? {}));
  return {
    data,
    getItem: (key) => data.get(key) ?? null,
    setItem: (key, value) => {
      data.set(key, value);
    },
  };
}

const KEY = "lata-ui.pane-fonts";

describe("clampSize", () => {
  it("clamps into the readable range", () => {
    expect(clampSize(200)).toBe(72);
    expect(clampSize(2)).toBe(8);
    expect(clampSize(17.6)).toBe(18);
  });

  it("falls back to the default for non-finite input", () => {
    expect(clampSize(Number.NaN)).toBe(16);
    expect(clampSize(Infinity)).toBe(16);
  });
});

describe("loadFonts", () => {
  it("returns defaults when nothing is stored", () => {
    expect(loadFonts(memoryStorage())).toEqual(defaultFonts());
  });

  it("round-trips through saveFonts", () => {
    const storage = memoryStorage();
    const fonts = {
      source: { family: "Amiri, serif", size: 22 },
      target: { family: "Inter, sans-serif", size: 14 },
    };
    saveFonts(storage, fonts);
    expect(loadFonts(storage)).toEqual(fonts);
  });

  it("survives corrupted JSON", () => {
    const storage = memoryStorage({ [KEY]: "{not json" });
    expect(loadFonts(storage)).toEqual(defaultFonts());
  });

  it("fills in missing panes and clamps stored sizes", () => {
    const storage = memoryStorage({
      [KEY]: JSON.stringify({ source: { family: "Courier", size: 900 } }),
    });
    const fonts = loadFonts(storage);
    expect(fonts.source).toEqual({ family: "Courier", size: 72 });
    expect(fonts.target).toEqual(defaultFonts().target);
  });

  it("ignores wrong-typed fields", () => {
    const storage = memoryStorage({
      [KEY]: JSON.stringify({
        source: { family: 42, size: "big" },
        target: null,
      }),
    });
    expect(loadFonts(storage)).toEqual(defaultFonts());
  });

  it("returns defaults when the storage itself throws", () => {
    const storage: StorageLike = {
      getItem: () => {
        throw new Error("denied");
      },
      setItem: () => {
        throw new Error("denied");
      },
    };
    expect(loadFonts(storage)).toEqual(defaultFonts());
    // And saving must not propagate the failure.
    expect(() => saveFonts(storage, defaultFonts())).not.toThrow();
  });
});
