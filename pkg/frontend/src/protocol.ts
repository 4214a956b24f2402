/** Wire types for the live-session websocket protocol (JSON text frames). */

export interface AckInfo {
  feedback_seq: number;
  episode: number;
  step: number;
}

export interface Snapshot {
  type: "snapshot";
  seq: number;
  episode: number;
  step: number;
  grid: number[];
  grid_size: number;
  agent: [number, number];
  goal: [number, number];
  last_action: string | null;
  episode_return: number;
  epsilon: number;
  alpha_h: number;
  done: boolean;
  status: string;
  clients: number;
  acks: AckInfo[];
}

export interface Ack extends AckInfo {
  type: "ack";
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export interface StatusMessage {
  type: "status";
  status: string;
  tick_ms: number;
  episode: number;
  step: number;
}

export type ServerMessage = Snapshot | Ack | ErrorMessage | StatusMessage;

export interface FeedbackMessage {
  type: "feedback";
  polarity: 1 | -1;
}

function fail(reason: string): never {
  throw new Error(`malformed server message: ${reason}`);
}

function expectNumber(value: unknown, name: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) fail(`${name} is not a number`);
  return value;
}

function expectCell(value: unknown, name: string): [number, number] {
  if (!Array.isArray(value) || value.length !== 2) fail(`${name} is not a cell`);
  return [expectNumber(value[0], name), expectNumber(value[1], name)];
}

/** Parse one frame, throwing on anything that does not match the protocol. */
export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    fail("invalid JSON");
  }
  if (typeof raw !== "object" || raw === null) fail("not an object");
  const msg = raw as Record<string, unknown>;

  switch (msg.type) {
    case "snapshot": {
      const size = expectNumber(msg.grid_size, "grid_size");
      if (!Array.isArray(msg.grid) || msg.grid.length !== size * size) {
        fail("grid length does not match grid_size");
      }
      expectNumber(msg.seq, "seq");
      expectNumber(msg.episode, "episode");
      expectNumber(msg.step, "step");
      expectNumber(msg.episode_return, "episode_return");
      expectNumber(msg.epsilon, "epsilon");
      expectNumber(msg.alpha_h, "alpha_h");
      expectCell(msg.agent, "agent");
      expectCell(msg.goal, "goal");
      if (typeof msg.done !== "boolean") fail("done is not a boolean");
      return msg as unknown as Snapshot;
    }
    case "ack":
      expectNumber(msg.feedback_seq, "feedback_seq");
      expectNumber(msg.episode, "episode");
      expectNumber(msg.step, "step");
      return msg as unknown as Ack;
    case "error":
      if (typeof msg.message !== "string") fail("error without message");
      return msg as unknown as ErrorMessage;
    case "status":
      return msg as unknown as StatusMessage;
    default:
      fail(`unknown type ${String(msg.type)}`);
  }
}
