/** DOM view: maze grid, HUD counters, schedule gauges, return sparkline.
 *
 * render() is idempotent: feeding it the same model twice leaves the DOM
 * byte-identical, so snapshot repeats cause no visual churn.
 */

import { ClientModel } from "./model.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className: string, parent: Element,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  parent.appendChild(node);
  return node;
}

function scaffold(root: HTMLElement): void {
  if (root.dataset.ready === "1") return;
  root.dataset.ready = "1";
  el("div", "banner", root).setAttribute("hidden", "");
  const hud = el("div", "hud", root);
  el("span", "episode", hud);
  el("span", "step", hud);
  el("span", "return", hud);
  el("span", "status", hud);
  el("div", "grid", root);
  const gauges = el("div", "gauges", root);
  for (const name of ["epsilon", "alpha-h"]) {
    const gauge = el("div", `gauge ${name}`, gauges);
    el("div", "fill", gauge);
    el("span", "value", gauge);
  }
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("class", "chart");
  svg.setAttribute("viewBox", "0 0 100 40");
  svg.setAttribute("preserveAspectRatio", "none");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("class", "returns");
  line.setAttribute("fill", "none");
  svg.appendChild(line);
  root.appendChild(svg);
  el("div", "credit", root);
}

function renderGrid(model: ClientModel, grid: HTMLElement): void {
  const snap = model.snapshot;
  if (!snap) return;
  const n = snap.grid_size;
  const total = n * n;
  grid.style.gridTemplateColumns = `repeat(${n}, 1fr)`;
  while (grid.children.length > total) grid.removeChild(grid.lastChild as Node);
  while (grid.children.length < total) el("div", "cell", grid);
  for (let i = 0; i < total; i++) {
    const cell = grid.children[i] as HTMLElement;
    const r = Math.floor(i / n);
    const c = i % n;
    const classes = ["cell", snap.grid[i] ? "wall" : "space"];
    if (r === snap.agent[0] && c === snap.agent[1]) classes.push("agent");
    if (r === snap.goal[0] && c === snap.goal[1]) classes.push("goal");
    cell.className = classes.join(" ");
  }
}

export function chartPoints(returns: number[]): string {
  if (returns.length === 0) return "";
  const xs = returns.length === 1 ? [50] :
    returns.map((_, i) => (i / (returns.length - 1)) * 100);
  return returns
    .map((value, i) => {
      const clamped = Math.max(-1, Math.min(1, value));
      const y = 20 - clamped * 20; // [-1, 1] mapped onto [40, 0]
      return `${xs[i].toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

export function render(model: ClientModel, root: HTMLElement): void {
  scaffold(root);
  const pick = (sel: string) => root.querySelector(sel) as HTMLElement;

  const banner = pick(".banner");
  if (model.banner) {
    banner.removeAttribute("hidden");
    banner.textContent = model.banner;
  } else {
    banner.setAttribute("hidden", "");
    banner.textContent = "";
  }

  root.classList.toggle("disconnected", model.connection === "closed");
  root.classList.toggle("flash", model.flash);

  const snap = model.snapshot;
  pick(".episode").textContent = snap ? `episode ${snap.episode}` : "episode -";
  pick(".step").textContent = snap ? `step ${snap.step}` : "step -";
  pick(".return").textContent =
    snap ? `return ${snap.episode_return.toFixed(2)}` : "return -";
  pick(".status").textContent = snap ? snap.status : model.connection;

  renderGrid(model, pick(".grid"));

  if (snap) {
    const eps = pick(".gauge.epsilon");
    (eps.querySelector(".fill") as HTMLElement).style.width =
      `${(snap.epsilon * 100).toFixed(1)}%`;
    (eps.querySelector(".value") as HTMLElement).textContent =
      `eps ${snap.epsilon.toFixed(3)}`;
    const alpha = pick(".gauge.alpha-h");
    (alpha.querySelector(".fill") as HTMLElement).style.width =
      `${(snap.alpha_h * 100).toFixed(1)}%`;
    (alpha.querySelector(".value") as HTMLElement).textContent =
      `alpha_h ${snap.alpha_h.toFixed(4)}`;
  }

  (pick(".chart .returns") as unknown as SVGPolylineElement)
    .setAttribute("points", chartPoints(model.returns));

  pick(".credit").textContent = model.lastCredit
    ? `feedback #${model.lastCredit.feedback_seq} credited at ` +
      `episode ${model.lastCredit.episode}, step ${model.lastCredit.step}`
    : "";
}
