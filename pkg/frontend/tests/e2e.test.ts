/**
 * Scripted end-to-end session.
 *
 * Drives the full near-miss recovery flow against scripted backends and
 * checks that the produced event log is exactly the canonical fixture in
 * fixtures/scripted_session.json. The service-side acceptance suite
 * replays that same fixture through POST /log and asserts the summary
 * (N_a = 10); together the two tests pin the client/server contract.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { EventLogger } from "../src/logging.js";
import { TypingSession } from "../src/state.js";
import type { LogEvent } from "../src/types.js";

const FIXTURE = join(dirname(fileURLToPath(import.meta.url)), "fixtures", "scripted_session.json");

describe("scripted session", () => {
  it("produces the canonical event log and N_a = 10", async () => {
    let tick = -100;
    const clock = () => (tick += 100);
    const logger = new EventLogger(clock);

    const flushed: LogEvent[] = [];
    const spoken: string[] = [];
    const session = new TypingSession(
      {
        expand: async (tokens) => {
          expect(tokens).toHaveLength(7);
          return {
            stale: false,
            value: [{ text: "i saw him play in the backyard", score: -1.0 }],
          };
        },
        fillMask: async (words, index) => {
          expect(words[index]).toBe("backyard");
          return ["bedroom"];
        },
        speak: async (text) => {
          spoken.push(text);
        },
        flushLog: async (events) => {
          flushed.push(...events);
        },
      },
      logger,
    );

    for (const ch of "ishpitb") session.keystroke(ch);
    await session.refreshCandidates();
    expect(session.candidates.map((c) => c.text)).toEqual([
      "i saw him play in the backyard",
    ]);

    expect(session.clickCandidate(0)).toBe(true);
    expect(session.fmWords).toEqual(["i", "saw", "him", "play", "in", "the", "backyard"]);

    await session.clickWordChip(6);
    expect(session.fmOptions).toEqual(["bedroom"]);
    expect(session.clickWordOption(0)).toBe(true);

    const text = await session.clickSpeak();
    expect(text).toBe("i saw him play in the bedroom");
    expect(spoken).toEqual(["i saw him play in the bedroom"]);

    const fixture = JSON.parse(readFileSync(FIXTURE, "utf-8")) as {
      events: LogEvent[];
    };
    expect(flushed).toEqual(fixture.events);

    const counted = flushed.filter(
      (e) => e.kind !== "speak_click" && e.kind !== "ae_options" && e.kind !== "fm_options",
    );
    expect(counted).toHaveLength(10);
  });
});
