/** Client state and its reducer.
 *
 * The model is a pure function of the event stream: socket lifecycle,
 * server frames and local warnings all funnel through reduce().  The UI
 * never simulates the environment; it renders the last acknowledged
 * snapshot and nothing else.
 */

import { Ack, Snapshot, parseServerMessage } from "./protocol.js";

export const RETURN_HISTORY = 200;

export type Connection = "connecting" | "open" | "closed";

export interface ClientModel {
  connection: Connection;
  snapshot: Snapshot | null;
  returns: number[];
  lastCredit: Ack | null;
  banner: string | null;
  flash: boolean;
}

export const initialModel: ClientModel = {
  connection: "connecting",
  snapshot: null,
  returns: [],
  lastCredit: null,
  banner: null,
  flash: false,
};

export type UiEvent =
  | { kind: "open" }
  | { kind: "closed" }
  | { kind: "server"; text: string }
  | { kind: "warning"; message: string };

export function reduce(model: ClientModel, event: UiEvent): ClientModel {
  switch (event.kind) {
    case "open":
      return { ...model, connection: "open", banner: null };
    case "closed":
      return { ...model, connection: "closed", banner: "connection lost" };
    case "warning":
      return { ...model, banner: event.message };
    case "server":
      return applyServer(model, event.text);
  }
}

function applyServer(model: ClientModel, text: string): ClientModel {
  let message;
  try {
    message = parseServerMessage(text);
  } catch (err) {
    // keep the last good frame, surface the problem
    return { ...model, banner: (err as Error).message };
  }
  switch (message.type) {
    case "snapshot": {
      const returns = [...model.returns, message.episode_return].slice(-RETURN_HISTORY);
      return {
        ...model,
        snapshot: message,
        returns,
        banner: null,
        flash: message.done,
      };
    }
    case "ack":
      return { ...model, lastCredit: message };
    case "error":
      return { ...model, banner: message.message };
    case "status":
      return model;
  }
}
