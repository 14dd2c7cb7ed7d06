/** Wire types shared with the service's /v1 JSON API. */

export type TokenKind = "initial" | "complete" | "incomplete" | "punct";

export interface WireToken {
  kind: TokenKind;
  surface: string;
}

export interface PhraseCandidate {
  text: string;
  score: number;
}

export type EventKind =
  | "keystroke"
  | "spell_mode_click"
  | "chip_click"
  | "candidate_click"
  | "word_option_click"
  | "speak_click"
  | "ae_options"
  | "fm_options";

export interface LogEvent {
  t: number;
  kind: EventKind;
  payload?: string | number | null;
}

export type Mode = "compose" | "spell" | "fillmask";
