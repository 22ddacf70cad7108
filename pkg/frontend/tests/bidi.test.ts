import { describe, expect, it } from "vitest";

import {
  blockDirAttributes,
  hasStrongRtl,
  isolate,
  paneDirection,
} from "../src/bidi.js";

describe("paneDirection", () => {
  it("recognizes RTL primary subtags", () => {
    for (const tag of ["ar", "he", "fa", "ur", "ckb"]) {
      expect(paneDirection(tag)).toBe("rtl");
    }
  });

  it("keeps LTR languages LTR", () => {
    for (const tag of ["en", "fr", "de-DE", "tr", "sw"]) {
      expect(paneDirection(tag)).toBe("ltr");
    }
  });

  it("reads region subtags past the primary", () => {
    expect(paneDirection("ar-EG")).toBe("rtl");
    expect(paneDirection("en-US")).toBe("ltr");
  });

  it("lets an explicit RTL script subtag decide for unknown primaries", () => {
    expect(paneDirection("und-Arab")).toBe("rtl");
    expect(paneDirection("az-Arab")).toBe("rtl");
    expect(paneDirection("und-Latn")).toBe("ltr");
  });

  it("is case-insensitive", () => {
    expect(paneDirection("AR")).toBe("rtl");
    expect(paneDirection("UND-ARAB")).toBe("rtl");
  });

  it("defaults to LTR for empty or junk tags", () => {
    expect(paneDirection("")).toBe("ltr");
    expect(paneDirection("-")).toBe("ltr");
  });
});

describe("hasStrongRtl", () => {
  it("detects Arabic and Hebrew letters", () => {
    expect(hasStrongRtl("كتب الرسالة")).toBe(true);
    expect(hasStrongRtl("שלום")).toBe(true);
  });

  it("stays false for Latin, digits, and punctuation", () => {
    expect(hasStrongRtl("hello, world! 123")).toBe(false);
    expect(hasStrongRtl("")).toBe(false);
  });

  it("sees RTL characters inside mixed text", () => {
    expect(hasStrongRtl('He said "مرحبا" and left.')).toBe(true);
  });
});

describe("isolate", () => {
  it("wraps text in FSI .. PDI", () => {
    const wrapped = isolate("abc");
    expect(wrapped.charCodeAt(0)).toBe(0x2068);
    expect(wrapped.charCodeAt(wrapped.length - 1)).toBe(0x2069);
    expect(wrapped.slice(1, -1)).toBe("abc");
  });
});

describe("blockDirAttributes", () => {
  it("always isolates per block with dir=auto", () => {
    expect(blockDirAttributes()).toEqual({ dir: "auto" });
  });
});
