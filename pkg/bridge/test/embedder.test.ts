import { describe, expect, it } from "vitest";
import { DEFAULT_DIM, MAX_TOKENS, embed, tokenize } from "../src/embedder.js";

describe("tokenize", () => {
  it("lowercases and splits on non-alphanumerics", () => {
    expect(tokenize("Margin, growth; MARGIN!")).toEqual(["margin", "growth", "margin"]);
  });

  it("keeps digits and unicode letters", () => {
    expect(tokenize("q3 2021 růst 利益")).toEqual(["q3", "2021", "růst", "利益"]);
  });

  it("returns nothing for punctuation-only text", () => {
    expect(tokenize("?!... ---")).toEqual([]);
  });
});

describe("embed", () => {
  it("is deterministic", () => {
    const a = embed("gross margin investment in price");
    const b = embed("gross margin investment in price");
    expect(a).toEqual(b);
  });

  it("produces vectors of the requested dimension", () => {
    expect(embed("hello world").length).toBe(DEFAULT_DIM);
    expect(embed("hello world", 32).length).toBe(32);
  });

  it("maps tokenless text to the zero vector", () => {
    const vec = embed("?!---");
    expect(vec.every((v) => v === 0)).toBe(true);
  });

  it("gives overlapping texts higher cosine than disjoint ones", () => {
    const cos = (a: number[], b: number[]) => {
      let num = 0,
        na = 0,
        nb = 0;
      for (let i = 0; i < a.length; i++) {
        num += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      return num / Math.sqrt(na * nb);
    };
    const q = "how did china revenue and iphone demand develop";
    const near = "china revenue was strong and iphone demand grew quickly";
    const far = "weather patterns delayed the harvest across the region";
    expect(cos(embed(q), embed(near))).toBeGreaterThan(cos(embed(q), embed(far)));
  });

  it("averages normalized chunk vectors beyond the token limit", () => {
    const words: string[] = [];
    for (let i = 0; i < MAX_TOKENS + 40; i++) words.push(`w${i}`);
    const whole = embed(words.join(" "));
    const first = embed(words.slice(0, MAX_TOKENS).join(" "));
    const second = embed(words.slice(MAX_TOKENS).join(" "));
    for (let i = 0; i < whole.length; i++) {
      expect(whole[i]).toBeCloseTo((first[i] + second[i]) / 2, 12);
    }
  });
});
