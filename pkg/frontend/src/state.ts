/**
 * Typing-session state machine, framework-free for testability.
 *
 * Three modes mirror the entry pathways: compose (type initials, pick a
 * candidate), spell (turn the abbreviation into chips and spell keywords),
 * and fillmask (explode a near-miss candidate into word chips and replace
 * the wrong words). Spell mode may be entered from compose, and fillmask
 * from either; entering spell after fillmask is forbidden and surfaces a
 * notice instead. The candidate list never exceeds five entries, and every
 * rendered candidate is re-checked against the current abbreviation.
 */

import { joinSurfaces, matchesAbbreviation, phraseTokens, tokensFromCompose } from "./abbrev.js";
import { EventLogger } from "./logging.js";
import type { LogEvent, Mode, PhraseCandidate, WireToken } from "./types.js";

export const MAX_OPTIONS = 5;

export interface Services {
  expand(tokens: WireToken[], k: number): Promise<{ stale: boolean; value: PhraseCandidate[] }>;
  fillMask(words: string[], index: number, k: number): Promise<string[]>;
  speak(text: string): Promise<void>;
  flushLog(events: LogEvent[]): Promise<void>;
}

export interface SpellChip {
  kind: "word" | "punct";
  /** Typed content; a word chip starts pre-filled with its initial. */
  typed: string;
  open: boolean;
}

export class TypingSession {
  mode: Mode = "compose";
  composeText = "";
  chips: SpellChip[] = [];
  fmWords: string[] = [];
  fmOptions: string[] = [];
  fmOpenIndex: number | null = null;
  fmTyped = "";
  candidates: PhraseCandidate[] = [];
  notice: string | null = null;
  spoken: string | null = null;
  /** In-flight request count; the UI shows a busy indicator while > 0. */
  busy = 0;

  constructor(
    private readonly services: Services,
    readonly logger: EventLogger = new EventLogger(),
  ) {}

  /** The abbreviation as currently shown, as wire tokens. */
  abbrevTokens(): WireToken[] {
    if (this.mode === "spell") {
      return this.chips.map((chip) =>
        chip.kind === "punct"
          ? { kind: "punct", surface: chip.typed }
          : chip.typed.length >= 2
            ? { kind: "incomplete", surface: chip.typed }
            : { kind: "initial", surface: chip.typed },
      );
    }
    return tokensFromCompose(this.composeText);
  }

  // -- compose pathway -------------------------------------------------------

  keystroke(ch: string): void {
    if (this.mode === "fillmask") return;
    this.logger.record("keystroke", ch);
    if (this.mode === "compose") {
      this.composeText += ch;
    } else if (this.fmOpenIndex === null) {
      const open = this.chips.findIndex((c) => c.open);
      if (open >= 0) this.chips[open].typed += ch.toLowerCase();
    }
  }

  backspace(): void {
    this.logger.record("keystroke", "backspace");
    if (this.mode === "compose") {
      this.composeText = this.composeText.slice(0, -1);
    } else if (this.mode === "spell") {
      const open = this.chips.findIndex((c) => c.open);
      if (open >= 0 && this.chips[open].typed.length > 1) {
        this.chips[open].typed = this.chips[open].typed.slice(0, -1);
      }
    }
  }

  /** Issue an expansion call for the current abbreviation and render it. */
  async refreshCandidates(): Promise<void> {
    const tokens = this.abbrevTokens();
    if (tokens.length === 0) {
      this.candidates = [];
      return;
    }
    this.busy += 1;
    let result;
    try {
      result = await this.services.expand(tokens, MAX_OPTIONS);
    } finally {
      this.busy -= 1;
    }
    if (result.stale) return; // a newer response already rendered
    this.logger.record("ae_options", result.value.length);
    this.candidates = result.value
      .filter((c) => matchesAbbreviation(c.text, tokens))
      .slice(0, MAX_OPTIONS);
  }

  // -- spell pathway ---------------------------------------------------------

  clickSpell(): boolean {
    if (this.mode === "fillmask") {
      this.notice = "Spelling is not available after word replacement.";
      return false;
    }
    if (this.mode === "spell") return true;
    const tokens = tokensFromCompose(this.composeText);
    if (tokens.length === 0) {
      this.notice = "Type an abbreviation first.";
      return false;
    }
    this.logger.record("spell_mode_click");
    this.mode = "spell";
    this.chips = tokens.map((t) =>
      t.kind === "punct"
        ? { kind: "punct", typed: t.surface, open: false }
        : { kind: "word", typed: t.surface, open: false },
    );
    return true;
  }

  clickChip(index: number): boolean {
    if (this.mode !== "spell") return false;
    const chip = this.chips[index];
    if (chip === undefined || chip.kind === "punct") return false;
    this.logger.record("chip_click", index);
    for (const c of this.chips) c.open = false;
    chip.open = true; // input box pre-filled with the chip's initial
    return true;
  }

  // -- fillmask pathway ------------------------------------------------------

  clickCandidate(index: number): boolean {
    const candidate = this.candidates[index];
    if (candidate === undefined) return false;
    this.logger.record("candidate_click", index);
    this.mode = "fillmask";
    this.fmWords = phraseTokens(candidate.text).map((t) => t.surface);
    this.fmOptions = [];
    this.fmOpenIndex = null;
    this.candidates = [];
    return true;
  }

  async clickWordChip(index: number): Promise<boolean> {
    if (this.mode !== "fillmask") return false;
    const surface = this.fmWords[index];
    if (surface === undefined || !/^[a-z0-9]/i.test(surface)) return false;
    this.logger.record("chip_click", index);
    this.fmOpenIndex = index;
    this.fmTyped = "";
    this.busy += 1;
    let options;
    try {
      options = await this.services.fillMask(this.fmWords, index, MAX_OPTIONS);
    } finally {
      this.busy -= 1;
    }
    this.logger.record("fm_options", options.length);
    const initial = surface[0].toLowerCase();
    this.fmOptions = options
      .filter((w) => w.toLowerCase().startsWith(initial))
      .slice(0, MAX_OPTIONS);
    return true;
  }

  clickWordOption(optionIndex: number): boolean {
    if (this.mode !== "fillmask" || this.fmOpenIndex === null) return false;
    const word = this.fmOptions[optionIndex];
    if (word === undefined) return false;
    this.logger.record("word_option_click", optionIndex);
    this.fmWords[this.fmOpenIndex] = word;
    this.fmOpenIndex = null;
    this.fmOptions = [];
    return true;
  }

  /** Manual fallback when no replacement option fits: type the word. */
  typeReplacement(ch: string): void {
    if (this.mode !== "fillmask" || this.fmOpenIndex === null) return;
    this.logger.record("keystroke", ch);
    this.fmTyped += ch;
  }

  commitReplacement(): boolean {
    if (this.mode !== "fillmask" || this.fmOpenIndex === null || !this.fmTyped) {
      return false;
    }
    this.fmWords[this.fmOpenIndex] = this.fmTyped.toLowerCase();
    this.fmOpenIndex = null;
    this.fmTyped = "";
    this.fmOptions = [];
    return true;
  }

  // -- speak -----------------------------------------------------------------

  currentPhrase(index?: number): string | null {
    if (this.mode === "fillmask") {
      return this.fmWords.length > 0 ? joinSurfaces(this.fmWords) : null;
    }
    const candidate = this.candidates[index ?? 0];
    return candidate === undefined ? null : candidate.text;
  }

  async clickSpeak(index?: number): Promise<string | null> {
    const text = this.currentPhrase(index);
    if (text === null) return null;
    this.logger.record("speak_click", text);
    await this.services.speak(text);
    await this.services.flushLog(this.logger.drain());
    this.spoken = text;
    this.reset();
    return text;
  }

  reset(): void {
    this.mode = "compose";
    this.composeText = "";
    this.chips = [];
    this.fmWords = [];
    this.fmOptions = [];
    this.fmOpenIndex = null;
    this.fmTyped = "";
    this.candidates = [];
    this.notice = null;
  }
}
