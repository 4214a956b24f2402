/** Entry point: one websocket, one reducer, one render target.
 *
 * Socket callbacks and user gestures all dispatch through the same
 * single-threaded event path, so the view is always a pure function of
 * the event history.
 */

import { DEBOUNCE_MS, FeedbackSender, polarityForKey } from "./feedback.js";
import { ClientModel, UiEvent, initialModel, reduce } from "./model.js";
import { render } from "./render.js";

function sessionUrl(): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/session/main`;
}

export function start(root: HTMLElement): void {
  let model: ClientModel = initialModel;
  const socket = new WebSocket(sessionUrl());

  const dispatch = (event: UiEvent) => {
    model = reduce(model, event);
    render(model, root);
  };

  socket.onopen = () => dispatch({ kind: "open" });
  socket.onclose = () => dispatch({ kind: "closed" });
  socket.onmessage = (ev) => dispatch({ kind: "server", text: String(ev.data) });

  const sender = new FeedbackSender({
    send: (text) => socket.send(text),
    connected: () => socket.readyState === WebSocket.OPEN,
  });

  const goodButton = root.ownerDocument.getElementById("feedback-good") as HTMLButtonElement;
  const badButton = root.ownerDocument.getElementById("feedback-bad") as HTMLButtonElement;

  const submit = (polarity: 1 | -1) => {
    const result = sender.submit(polarity);
    if (result === "disconnected") {
      dispatch({ kind: "warning", message: "feedback dropped: not connected" });
      return;
    }
    if (result === "sent") {
      for (const button of [goodButton, badButton]) {
        if (!button) continue;
        button.disabled = true;
        setTimeout(() => { button.disabled = false; }, DEBOUNCE_MS);
      }
    }
  };

  goodButton?.addEventListener("click", () => submit(1));
  badButton?.addEventListener("click", () => submit(-1));
  root.ownerDocument.addEventListener("keydown", (ev) => {
    const polarity = polarityForKey(ev.key);
    if (polarity !== null) submit(polarity);
  });

  render(model, root);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start(document.getElementById("app") as HTMLElement);
}
