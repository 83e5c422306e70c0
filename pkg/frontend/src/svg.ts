/**
 * Minimal deterministic SVG assembly: plain string building with fixed
 * number formatting, so identical inputs always produce identical bytes.
 */

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  return Number(x.toPrecision(6)).toString();
}

export function tag(
  name: string,
  attrs: Record<string, string | number>,
  children: string[] = []
): string {
  const parts = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
    .join(" ");
  if (children.length === 0) return `<${name} ${parts}/>`;
  return `<${name} ${parts}>${children.join("")}</${name}>`;
}

export type Scale = {
  toPixel(value: number): number;
  ticks(): number[];
  kind: "linear" | "log";
  domain: [number, number];
};

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return {
    kind: "linear",
    domain,
    toPixel: (v) => r0 + ((v - d0) / span) * (r1 - r0),
    ticks: () => {
      const step = niceStep(span / 5);
      const start = Math.ceil(d0 / step) * step;
      const out: number[] = [];
      for (let t = start; t <= d1 + 1e-9 * Math.abs(step); t += step) out.push(t);
      return out;
    },
  };
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  return {
    kind: "log",
    domain,
    toPixel: (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0),
    ticks: () => {
      const out: number[] = [];
      const stride = Math.max(1, Math.round(span / 6));
      for (let e = Math.ceil(l0); e <= Math.floor(l1); e += stride) out.push(10 ** e);
      return out;
    },
  };
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const unit = raw / mag;
  const nice = unit < 1.5 ? 1 : unit < 3.5 ? 2 : unit < 7.5 ? 5 : 10;
  return nice * mag;
}

export function polyline(
  xs: number[],
  ys: number[],
  xScale: Scale,
  yScale: Scale,
  attrs: Record<string, string | number>
): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    const x = xs[i];
    const y = ys[i];
    if (xScale.kind === "log" && x <= 0) continue;
    if (yScale.kind === "log" && y <= 0) continue;
    pts.push(`${fmt(xScale.toPixel(x))},${fmt(yScale.toPixel(y))}`);
  }
  return tag("polyline", { points: pts.join(" "), fill: "none", ...attrs });
}

export interface AxesSpec {
  x: Scale;
  y: Scale;
  left: number;
  top: number;
  width: number;
  height: number;
  xLabel: string;
  yLabel: string;
  title?: string;
}

export function axes(spec: AxesSpec): string {
  const { x, y, left, top, width, height } = spec;
  const parts: string[] = [];
  parts.push(
    tag("rect", {
      x: left,
      y: top,
      width,
      height,
      fill: "none",
      stroke: "#333333",
      "stroke-width": 1,
      "data-x-scale": x.kind,
      "data-y-scale": y.kind,
    })
  );
  for (const t of x.ticks()) {
    const px = x.toPixel(t);
    parts.push(tag("line", { x1: px, y1: top + height, x2: px, y2: top + height + 4, stroke: "#333333" }));
    parts.push(
      tag(
        "text",
        { x: px, y: top + height + 16, "text-anchor": "middle", "font-size": 10 },
        [tickLabel(t, x.kind)]
      )
    );
  }
  for (const t of y.ticks()) {
    const py = y.toPixel(t);
    parts.push(tag("line", { x1: left - 4, y1: py, x2: left, y2: py, stroke: "#333333" }));
    parts.push(
      tag(
        "text",
        { x: left - 6, y: py + 3, "text-anchor": "end", "font-size": 10 },
        [tickLabel(t, y.kind)]
      )
    );
  }
  parts.push(
    tag(
      "text",
      { x: left + width / 2, y: top + height + 32, "text-anchor": "middle", "font-size": 12 },
      [spec.xLabel]
    )
  );
  parts.push(
    tag(
      "text",
      {
        x: left - 40,
        y: top + height / 2,
        "text-anchor": "middle",
        "font-size": 12,
        transform: `rotate(-90 ${fmt(left - 40)} ${fmt(top + height / 2)})`,
      },
      [spec.yLabel]
    )
  );
  if (spec.title) {
    parts.push(
      tag(
        "text",
        { x: left + width / 2, y: top - 8, "text-anchor": "middle", "font-size": 13 },
        [spec.title]
      )
    );
  }
  return parts.join("");
}

function tickLabel(t: number, kind: "linear" | "log"): string {
  if (kind === "log") {
    const e = Math.round(Math.log10(t));
    return `1e${e}`;
  }
  return fmt(t);
}

export function document(width: number, height: number, body: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">` +
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>` +
    body.join("") +
    `</svg>`
  );
}
