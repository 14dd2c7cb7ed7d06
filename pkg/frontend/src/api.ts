/**
 * Service client with response sequencing.
 *
 * Expansion requests fire after every keystroke, so responses can arrive
 * out of order; each request carries a monotonically increasing sequence
 * number and a response is dropped unless it is newer than the last one
 * applied.
 */

import type { LogEvent, PhraseCandidate, WireToken } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SequencedResult<T> {
  seq: number;
  stale: boolean;
  value: T;
}

export class ApiClient {
  private issued = 0;
  private applied = 0;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post(path: string, body: unknown): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`${path} failed: ${response.status}`);
    }
    return response.json();
  }

  async createSession(): Promise<string> {
    const data = (await this.post("/session", {})) as { id: string };
    return data.id;
  }

  async commitTurn(sessionId: string, text: string, speaker?: number): Promise<void> {
    await this.post(`/session/${sessionId}/turn`, { text, speaker: speaker ?? null });
  }

  /** Sequenced expansion call; `stale` is true when a newer response already landed. */
  async expand(
    sessionId: string,
    tokens: WireToken[],
    k = 5,
  ): Promise<SequencedResult<PhraseCandidate[]>> {
    const seq = ++this.issued;
    const data = (await this.post("/ae", { session_id: sessionId, tokens, k })) as {
      candidates: PhraseCandidate[];
    };
    if (seq <= this.applied) {
      return { seq, stale: true, value: [] };
    }
    this.applied = seq;
    return { seq, stale: false, value: data.candidates };
  }

  async fillMask(
    sessionId: string,
    phraseWords: string[],
    maskedIndex: number,
    k = 5,
  ): Promise<string[]> {
    const data = (await this.post("/fillmask", {
      session_id: sessionId,
      phrase_words: phraseWords,
      masked_index: maskedIndex,
      k,
    })) as { candidates: string[] };
    return data.candidates;
  }

  async flushLog(sessionId: string, events: LogEvent[]): Promise<void> {
    if (events.length === 0) return;
    await this.post("/log", { session_id: sessionId, events });
  }
}
