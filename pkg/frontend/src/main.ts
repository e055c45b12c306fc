/** DOM wiring for the MUSHRA rating page.
 *
 * One trial is shown at a time: the labelled reference leftmost, then one
 * column per condition with a play button and a 0-100 slider. Submission
 * is enabled once every slider has been touched; submitted ratings go
 * through a retry buffer so a flaky connection never loses values.
 */

import { ApiClient } from "./api.js";
import { WebAudioSink } from "./audio.js";
import { SyncPlayer } from "./player.js";
import { RatingsQueue } from "./ratings.js";
import { TrialState } from "./trial.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

async function runTrial(
  root: HTMLElement,
  api: ApiClient,
  queue: RatingsQueue,
  participant: string,
  state: TrialState,
): Promise<void> {
  root.replaceChildren();
  const heading = el("h2", "", `Trial: ${state.trialId}`);
  root.appendChild(heading);
  const status = el("p", "status", "Loading stimuli…");
  root.appendChild(status);

  const context = new AudioContext();
  const sink = new WebAudioSink(context, (id) => api.stimulusUrl(id));
  const ids = state.slots().map((s) => s.stimulusId);
  const duration = await sink.preload([...new Set(ids)]);
  const player = new SyncPlayer(sink, duration);
  status.textContent =
    "Rate each condition against the reference (0 = very different, 100 = identical).";

  const row = el("div", "slots");
  root.appendChild(row);
  const submit = el("button", "submit", "Submit ratings") as HTMLButtonElement;
  submit.disabled = true;

  const refresh = () => {
    submit.disabled = !state.canSubmit();
    for (const button of row.querySelectorAll("button.play")) {
      button.classList.toggle(
        "active",
        button.getAttribute("data-id") === player.current(),
      );
    }
  };

  for (const slot of state.slots()) {
    const column = el("div", slot.isReference ? "slot reference" : "slot");
    column.appendChild(
      el("h3", "", slot.isReference ? "Reference" : slot.stimulusId),
    );
    const play = el("button", "play", "Play") as HTMLButtonElement;
    play.setAttribute("data-id", slot.stimulusId);
    play.addEventListener("click", () => {
      if (context.state === "suspended") {
        void context.resume();
      }
      player.play(slot.stimulusId);
      refresh();
    });
    column.appendChild(play);

    if (!slot.isReference) {
      const slider = el("input") as HTMLInputElement;
      slider.type = "range";
      slider.min = "0";
      slider.max = "100";
      slider.step = "1";
      slider.value = "0";
      const value = el("output", "", "0");
      slider.addEventListener("input", () => {
        state.setRating(slot.stimulusId, Number(slider.value));
        value.textContent = String(state.rating(slot.stimulusId));
        refresh();
      });
      column.appendChild(slider);
      column.appendChild(value);
    }
    row.appendChild(column);
  }

  root.appendChild(submit);
  await new Promise<void>((resolve) => {
    submit.addEventListener("click", async () => {
      submit.disabled = true;
      player.pause();
      const delivered = await queue.submit(state.records(participant));
      if (!delivered) {
        status.textContent =
          "Submission buffered — the service is unreachable; ratings are kept and retried.";
        window.setTimeout(async () => {
          if (await queue.flush()) {
            resolve();
          } else {
            submit.disabled = false;
          }
        }, 2000);
        return;
      }
      resolve();
    });
  });
  void context.close();
}

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const params = new URLSearchParams(window.location.search);
  const participant = params.get("participant") ?? "anonymous";
  const api = new ApiClient("");
  const queue = new RatingsQueue((records) => api.postRatings(records));

  const session = await api.session(participant);
  for (const trial of session.trials) {
    await runTrial(root, api, queue, participant, new TrialState(trial));
  }
  root.replaceChildren(el("h2", "", "All trials complete — thank you!"));
}

document.addEventListener("DOMContentLoaded", () => {
  void start().catch((err) => {
    const root = document.getElementById("app");
    if (root) {
      root.replaceChildren(el("p", "error", String(err)));
    }
  });
});
