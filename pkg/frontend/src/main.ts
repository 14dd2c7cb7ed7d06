/**
 * DOM wiring for the typing UI.
 *
 * The state machine does the thinking; this file renders it and forwards
 * input. Expansion calls are debounced 150 ms behind the keystrokes, and
 * the phrase is spoken with the browser's speech synthesis when available.
 */

import { ApiClient } from "./api.js";
import { debounce, EventLogger } from "./logging.js";
import { TypingSession } from "./state.js";

const params = new URLSearchParams(window.location.search);
const BASE_URL = params.get("api") ?? "http://127.0.0.1:8080/v1";
const SPEAK_ALOUD = params.get("tts") === "1";

const api = new ApiClient(BASE_URL);
let sessionId = "";
const logger = new EventLogger();

const session = new TypingSession(
  {
    expand: (tokens, k) => api.expand(sessionId, tokens, k),
    fillMask: (words, index, k) => api.fillMask(sessionId, words, index, k),
    speak: async (text) => {
      await api.commitTurn(sessionId, text, 1);
      if (SPEAK_ALOUD && "speechSynthesis" in window) {
        window.speechSynthesis.speak(new SpeechSynthesisUtterance(text));
      }
    },
    flushLog: (events) => api.flushLog(sessionId, events),
  },
  logger,
);

const el = (id: string) => document.getElementById(id)!;
const refresh = debounce(() => void session.refreshCandidates().then(render), 150);

function render(): void {
  el("mode").textContent = session.mode;
  el("busy").textContent = session.busy > 0 ? "…" : "";
  el("notice").textContent = session.notice ?? "";
  el("compose").textContent = session.composeText || " ";

  const chipBar = el("chips");
  chipBar.innerHTML = "";
  if (session.mode === "spell") {
    session.chips.forEach((chip, i) => {
      const node = document.createElement("button");
      node.className = chip.open ? "chip open" : "chip";
      node.textContent = chip.typed;
      node.onclick = () => {
        if (session.clickChip(i)) render();
      };
      chipBar.appendChild(node);
    });
  } else if (session.mode === "fillmask") {
    session.fmWords.forEach((word, i) => {
      const node = document.createElement("button");
      node.className = session.fmOpenIndex === i ? "chip open" : "chip";
      node.textContent = word;
      node.onclick = () => void session.clickWordChip(i).then(render);
      chipBar.appendChild(node);
    });
  }

  const list = el("candidates");
  list.innerHTML = "";
  session.candidates.forEach((candidate, i) => {
    const row = document.createElement("li");
    const pick = document.createElement("button");
    pick.textContent = candidate.text;
    pick.title = "Not quite right? Click to replace words.";
    pick.onclick = () => {
      if (session.clickCandidate(i)) render();
    };
    const speak = document.createElement("button");
    speak.textContent = "🔊";
    speak.className = "speak";
    speak.onclick = () => void session.clickSpeak(i).then(onSpoken);
    row.append(pick, speak);
    list.appendChild(row);
  });

  const options = el("word-options");
  options.innerHTML = "";
  session.fmOptions.forEach((word, i) => {
    const node = document.createElement("button");
    node.textContent = word;
    node.onclick = () => {
      if (session.clickWordOption(i)) render();
    };
    options.appendChild(node);
  });
  (el("fm-speak") as HTMLButtonElement).style.display =
    session.mode === "fillmask" ? "inline-block" : "none";
}

function onSpoken(text: string | null): void {
  if (text !== null) {
    const turn = document.createElement("li");
    turn.textContent = text;
    el("context").appendChild(turn);
  }
  render();
}

function onKey(event: KeyboardEvent): void {
  if (event.key === "Backspace") {
    session.backspace();
    event.preventDefault();
  } else if (event.key.length === 1 && /[a-z0-9,;: ]/i.test(event.key)) {
    if (session.mode === "fillmask") {
      session.typeReplacement(event.key);
    } else {
      session.keystroke(event.key.toLowerCase());
    }
  } else if (event.key === "Enter" && session.mode === "fillmask") {
    session.commitReplacement();
  } else {
    return;
  }
  render();
  if (session.mode !== "fillmask") refresh();
}

async function start(): Promise<void> {
  sessionId = await api.createSession();
  el("session").textContent = sessionId;
  document.addEventListener("keydown", onKey);
  el("spell").onclick = () => {
    session.clickSpell();
    render();
    if (session.mode === "spell") refresh();
  };
  el("fm-speak").onclick = () => void session.clickSpeak().then(onSpoken);
  render();
}

void start();
