/**
 * The three figure families rendered from trajectory CSVs:
 *
 *  - loss vs training time, one curve per weight variance (log-log)
 *  - information-plane trajectories with the optimal frontier overlay in red
 *  - four-panel time view (representation information, parameter
 *    information, its rate, and the losses), all panels log-log
 *
 * Rendering is a pure function of the parsed tables; no metric is ever
 * recomputed here.
 */

import { FrontierTable, Trajectory } from "./csv.js";
import { Scale, axes, document, linearScale, logScale, polyline, tag } from "./svg.js";

/** Dark-to-light purples indexed by weight-variance rank. */
export function purple(rank: number, count: number): string {
  const t = count <= 1 ? 0 : rank / (count - 1);
  const mix = (a: number, b: number) => Math.round(a + (b - a) * t);
  const [r, g, b] = [mix(45, 194), mix(0, 165), mix(75, 207)];
  return `rgb(${r},${g},${b})`;
}

function sortByVariance(trajectories: Trajectory[]): Trajectory[] {
  return [...trajectories].sort((a, b) => b.weightVariance - a.weightVariance);
}

function positiveExtent(series: number[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const values of series) {
    for (const v of values) {
      if (v > 0 && Number.isFinite(v)) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  if (!Number.isFinite(lo)) {
    lo = 1e-3;
    hi = 1;
  }
  return [lo, hi];
}

function extent(series: number[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const values of series) {
    for (const v of values) {
      if (Number.isFinite(v)) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  const pad = 0.05 * (hi - lo || 1);
  return [lo - pad, hi + pad];
}

function legend(trajs: Trajectory[], left: number, top: number): string {
  const parts: string[] = [];
  trajs.forEach((t, i) => {
    const y = top + 14 * i;
    parts.push(
      tag("line", {
        x1: left,
        y1: y,
        x2: left + 18,
        y2: y,
        stroke: purple(i, trajs.length),
        "stroke-width": 2,
      })
    );
    parts.push(
      tag("text", { x: left + 24, y: y + 3, "font-size": 10 }, [
        `wv ${t.weightVariance}`,
      ])
    );
  });
  return parts.join("");
}

const W = 640;
const H = 480;
const MARGIN = { left: 70, right: 30, top: 40, bottom: 50 };

function frame(): { left: number; top: number; width: number; height: number } {
  return {
    left: MARGIN.left,
    top: MARGIN.top,
    width: W - MARGIN.left - MARGIN.right,
    height: H - MARGIN.top - MARGIN.bottom,
  };
}

/** Loss as a function of training time, one curve per weight variance. */
export function renderLossFigure(trajectories: Trajectory[]): string {
  const trajs = sortByVariance(trajectories);
  const f = frame();
  const taus = trajs.map((t) => t.column("tau"));
  const losses = trajs.flatMap((t) => [t.column("test_loss"), t.column("train_loss")]);
  const x = logScale(positiveExtent(taus), [f.left, f.left + f.width]);
  const y = logScale(positiveExtent(losses), [f.top + f.height, f.top]);
  const body: string[] = [
    axes({ x, y, ...f, xLabel: "training time", yLabel: "loss", title: "Loss vs training time" }),
  ];
  trajs.forEach((t, i) => {
    const color = purple(i, trajs.length);
    body.push(polyline(t.column("tau"), t.column("test_loss"), x, y, { stroke: color, "stroke-width": 2 }));
    body.push(
      polyline(t.column("tau"), t.column("train_loss"), x, y, {
        stroke: color,
        "stroke-width": 1,
        "stroke-dasharray": "4 3",
      })
    );
  });
  body.push(legend(trajs, f.left + 10, f.top + 12));
  return document(W, H, body);
}

/** Information-plane trajectories with the optimal frontier drawn in red. */
export function renderInfoPlane(trajectories: Trajectory[], frontier: FrontierTable): string {
  const trajs = sortByVariance(trajectories);
  const f = frame();
  const xsAll = trajs.map((t) => t.column("izx_lower")).concat([frontier.izx]);
  const ysAll = trajs.map((t) => t.column("izy_lower")).concat([frontier.izy]);
  const x = linearScale(extent(xsAll), [f.left, f.left + f.width]);
  const y = linearScale(extent(ysAll), [f.top + f.height, f.top]);
  const body: string[] = [
    axes({
      x,
      y,
      ...f,
      xLabel: "I(Z;X|D) lower bound (nats)",
      yLabel: "I(Z;Y) lower bound (nats)",
      title: "Information plane",
    }),
  ];
  body.push(
    polyline(frontier.izx, frontier.izy, x, y, {
      stroke: "red",
      "stroke-width": 2,
      id: "gib-frontier",
    })
  );
  const lastIdx = frontier.izx.length - 1;
  body.push(
    tag(
      "text",
      {
        x: x.toPixel(frontier.izx[lastIdx]) - 4,
        y: y.toPixel(frontier.izy[lastIdx]) - 6,
        "text-anchor": "end",
        "font-size": 11,
        fill: "red",
      },
      ["optimal IB frontier"]
    )
  );
  trajs.forEach((t, i) => {
    body.push(
      polyline(t.column("izx_lower"), t.column("izy_lower"), x, y, {
        stroke: purple(i, trajs.length),
        "stroke-width": 2,
      })
    );
  });
  body.push(legend(trajs, f.left + 10, f.top + 12));
  return document(W, H, body);
}

/**
 * Four log-log panels against training time: representation information,
 * parameter information, its time derivative, and the losses.
 */
export function renderTimePanel(trajectories: Trajectory[]): string {
  const trajs = sortByVariance(trajectories);
  const panels: { column: "izx_lower" | "itheta_d" | "ditheta_d_dtau" | "test_loss"; label: string }[] = [
    { column: "izx_lower", label: "I(Z;X|D) lower bound" },
    { column: "itheta_d", label: "I(params;D) bound" },
    { column: "ditheta_d_dtau", label: "d I(params;D) / dt" },
    { column: "test_loss", label: "test loss" },
  ];
  const width = 900;
  const height = 700;
  const cell = { w: 380, h: 270, padX: 70, padY: 50 };
  const body: string[] = [];
  panels.forEach((panel, p) => {
    const col = p % 2;
    const row = Math.floor(p / 2);
    const left = cell.padX + col * (cell.w + cell.padX);
    const top = cell.padY + row * (cell.h + cell.padY + 20);
    const taus = trajs.map((t) => t.column("tau"));
    const values = trajs.map((t) => t.column(panel.column));
    const x = logScale(positiveExtent(taus), [left, left + cell.w]);
    const y = logScale(positiveExtent(values), [top + cell.h, top]);
    body.push(
      axes({
        x,
        y,
        left,
        top,
        width: cell.w,
        height: cell.h,
        xLabel: "training time",
        yLabel: panel.label,
        title: panel.label,
      })
    );
    trajs.forEach((t, i) => {
      body.push(
        polyline(t.column("tau"), t.column(panel.column), x, y, {
          stroke: purple(i, trajs.length),
          "stroke-width": 1.5,
        })
      );
    });
  });
  return document(width, height, body);
}
