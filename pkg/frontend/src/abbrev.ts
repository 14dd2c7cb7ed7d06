/**
 * Client-side abbreviation handling.
 *
 * Mirrors the server's scheme: one lowercase initial per word, mid-sentence
 * punctuation kept as its own token, keywords spelled fully or as a prefix
 * of two or more letters. Candidates rendered in the UI are re-checked
 * against the current abbreviation defensively; a misaligned candidate is
 * never shown.
 */

import type { WireToken } from "./types.js";

export const MID_PUNCT = new Set([",", ";", ":"]);
const VOWELS = new Set(["a", "e", "i", "o", "u"]);

/** Parse the compose box text ("ishpitb", "o,sg") into wire tokens. */
export function tokensFromCompose(text: string): WireToken[] {
  const tokens: WireToken[] = [];
  for (const ch of text.toLowerCase()) {
    if (MID_PUNCT.has(ch)) {
      tokens.push({ kind: "punct", surface: ch });
    } else if (/[a-z0-9]/.test(ch)) {
      tokens.push({ kind: "initial", surface: ch });
    }
    // anything else typed into the compose box is ignored
  }
  return tokens;
}

/** Split a phrase into word / punctuation surfaces, dropping a final mark. */
export function phraseTokens(text: string): WireToken[] {
  const tokens: WireToken[] = [];
  for (const piece of text.toLowerCase().matchAll(/[a-z0-9][a-z0-9'\-]*|[^\sa-z0-9]/g)) {
    const surface = piece[0];
    if (/^[a-z0-9]/.test(surface)) {
      tokens.push({ kind: "complete", surface });
    } else if (MID_PUNCT.has(surface) || [".", "!", "?"].includes(surface)) {
      if (tokens.length > 0) tokens.push({ kind: "punct", surface });
    }
  }
  while (tokens.length > 0) {
    const last = tokens[tokens.length - 1];
    if (last.kind === "punct" && [".", "!", "?"].includes(last.surface)) tokens.pop();
    else break;
  }
  return tokens;
}

export function consonantShorthand(word: string, limit: number): string {
  const lowered = word.toLowerCase();
  let kept = lowered[0];
  for (const ch of lowered.slice(1)) {
    if (!VOWELS.has(ch)) kept += ch;
  }
  return kept.slice(0, limit);
}

/** Does a candidate phrase line up token-for-token with the abbreviation? */
export function matchesAbbreviation(text: string, abbrev: WireToken[]): boolean {
  const words = phraseTokens(text);
  if (words.length !== abbrev.length) return false;
  for (let i = 0; i < words.length; i++) {
    const got = words[i];
    const want = abbrev[i];
    if (want.kind === "punct") {
      if (got.kind !== "punct" || got.surface !== want.surface) return false;
      continue;
    }
    if (got.kind === "punct") return false;
    const word = got.surface;
    const surface = want.surface.toLowerCase();
    if (want.kind === "initial") {
      if (surface.length !== 1 || !word.startsWith(surface)) return false;
    } else if (want.kind === "complete") {
      if (word !== surface) return false;
    } else {
      if (surface.length < 2) return false;
      const prefix = word.startsWith(surface);
      const consonant = consonantShorthand(word, surface.length) === surface;
      if (!prefix && !consonant) return false;
    }
  }
  return true;
}

/** Join word/punct surfaces back into display text. */
export function joinSurfaces(surfaces: readonly string[]): string {
  const parts: string[] = [];
  for (const s of surfaces) {
    if (s.length === 1 && !/[a-z0-9]/i.test(s) && parts.length > 0) {
      parts[parts.length - 1] += s;
    } else {
      parts.push(s);
    }
  }
  return parts.join(" ");
}
