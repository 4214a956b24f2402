import { beforeEach, describe, expect, it } from "vitest";

import { initialModel, reduce } from "../src/model.js";
import { chartPoints, render } from "../src/render.js";
import fixture from "./fixtures/snapshots.json";

const frames: any[] = fixture as any[];
const snapshots = frames.filter((f) => f.type === "snapshot");

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app") as HTMLElement;
});

function modelWith(payload: unknown) {
  return reduce(initialModel, { kind: "server", text: JSON.stringify(payload) });
}

describe("render", () => {
  it("draws one cell per grid entry", () => {
    render(modelWith(snapshots[0]), root);
    expect(root.querySelectorAll(".cell")).toHaveLength(64);
  });

  it("marks walls, agent and goal", () => {
    const snap = snapshots[0];
    render(modelWith(snap), root);
    const walls = root.querySelectorAll(".cell.wall");
    expect(walls).toHaveLength(snap.grid.filter((v: number) => v === 1).length);
    const agent = root.querySelectorAll(".cell.agent");
    expect(agent).toHaveLength(1);
    const idx = Array.from(root.querySelectorAll(".cell")).indexOf(agent[0]);
    expect(idx).toBe(snap.agent[0] * snap.grid_size + snap.agent[1]);
    expect(root.querySelectorAll(".cell.goal")).toHaveLength(1);
  });

  it("is idempotent: repeated snapshots cause no visual diff", () => {
    const model = modelWith(snapshots[0]);
    render(model, root);
    const first = root.innerHTML;
    render(model, root);
    expect(root.innerHTML).toBe(first);
  });

  it("updates counters from the snapshot", () => {
    const snap = snapshots[3];
    render(modelWith(snap), root);
    expect(root.querySelector(".episode")?.textContent).toBe(`episode ${snap.episode}`);
    expect(root.querySelector(".step")?.textContent).toBe(`step ${snap.step}`);
    expect(root.querySelector(".return")?.textContent)
      .toBe(`return ${snap.episode_return.toFixed(2)}`);
  });

  it("keeps the last good frame and shows a banner on malformed input", () => {
    let model = modelWith(snapshots[0]);
    render(model, root);
    model = reduce(model, { kind: "server", text: "{nope" });
    render(model, root);
    expect(root.querySelectorAll(".cell")).toHaveLength(64);
    const banner = root.querySelector(".banner") as HTMLElement;
    expect(banner.hasAttribute("hidden")).toBe(false);
    expect(banner.textContent).toMatch(/malformed/);
  });

  it("flashes when the agent reaches the goal", () => {
    render(modelWith({ ...snapshots[0], done: true }), root);
    expect(root.classList.contains("flash")).toBe(true);
  });

  it("fills the schedule gauges", () => {
    const snap = snapshots[0];
    render(modelWith(snap), root);
    const fill = root.querySelector(".gauge.epsilon .fill") as HTMLElement;
    expect(fill.style.width).toBe(`${(snap.epsilon * 100).toFixed(1)}%`);
  });

  it("shows the acknowledged credit step", () => {
    const ack = frames.find((f) => f.type === "ack");
    let model = modelWith(snapshots[0]);
    model = reduce(model, { kind: "server", text: JSON.stringify(ack) });
    render(model, root);
    expect(root.querySelector(".credit")?.textContent)
      .toContain(`step ${ack.step}`);
  });
});

describe("chartPoints", () => {
  it("is empty without history", () => {
    expect(chartPoints([])).toBe("");
  });

  it("maps the return range onto the viewBox", () => {
    const pts = chartPoints([-1, 0, 1]).split(" ");
    expect(pts).toHaveLength(3);
    expect(pts[0]).toBe("0.00,40.00");
    expect(pts[1]).toBe("50.00,20.00");
    expect(pts[2]).toBe("100.00,0.00");
  });

  it("clamps extreme returns", () => {
    expect(chartPoints([-5])).toBe("50.00,40.00");
  });
});

describe("recorded stream playback", () => {
  it("renders every frame with 64 cells and traces the agent exactly", () => {
    let model = initialModel;
    const trace: number[] = [];
    for (const frame of frames) {
      model = reduce(model, { kind: "server", text: JSON.stringify(frame) });
      render(model, root);
      if (frame.type !== "snapshot") continue;
      const cells = root.querySelectorAll(".cell");
      expect(cells).toHaveLength(64);
      const agent = root.querySelector(".cell.agent");
      trace.push(Array.from(cells).indexOf(agent as Element));
    }
    const expected = snapshots.map((s) => s.agent[0] * s.grid_size + s.agent[1]);
    expect(trace).toEqual(expected);
  });
});
