/** Minimal SVG line chart for income/consumption history. */

export interface Series {
  label: string;
  color: string;
  points: { x: number; y: number }[];
}

export function renderLineChart(
  series: Series[],
  width = 560,
  height = 220,
): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", "Income and consumption history");

  const all = series.flatMap((s) => s.points);
  if (all.length === 0) return svg;
  const pad = 28;
  const xs = all.map((p) => p.x);
  const ys = all.map((p) => p.y);
  const xMin = Math.min(...xs), xMax = Math.max(...xs, xs[0]! + 1);
  const yMin = Math.min(...ys, 0), yMax = Math.max(...ys, 1);
  const sx = (x: number) =>
    pad + ((x - xMin) / (xMax - xMin || 1)) * (width - 2 * pad);
  const sy = (y: number) =>
    height - pad - ((y - yMin) / (yMax - yMin || 1)) * (height - 2 * pad);

  const axis = document.createElementNS(svg.namespaceURI, "path");
  axis.setAttribute(
    "d",
    `M ${pad} ${pad} L ${pad} ${height - pad} L ${width - pad} ${height - pad}`,
  );
  axis.setAttribute("stroke", "#999");
  axis.setAttribute("fill", "none");
  svg.appendChild(axis);

  if (yMin < 0) {
    const zero = document.createElementNS(svg.namespaceURI, "line");
    zero.setAttribute("x1", String(pad));
    zero.setAttribute("x2", String(width - pad));
    zero.setAttribute("y1", String(sy(0)));
    zero.setAttribute("y2", String(sy(0)));
    zero.setAttribute("stroke", "#ccc");
    zero.setAttribute("stroke-dasharray", "4 3");
    svg.appendChild(zero);
  }

  series.forEach((s, i) => {
    if (s.points.length === 0) return;
    const path = document.createElementNS(svg.namespaceURI, "polyline");
    path.setAttribute(
      "points",
      s.points.map((p) => `${sx(p.x)},${sy(p.y)}`).join(" "),
    );
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", s.color);
    path.setAttribute("stroke-width", "2");
    svg.appendChild(path);

    const label = document.createElementNS(svg.namespaceURI, "text");
    label.setAttribute("x", String(width - pad - 120));
    label.setAttribute("y", String(pad + 16 * i));
    label.setAttribute("fill", s.color);
    label.setAttribute("font-size", "12");
    label.textContent = s.label;
    svg.appendChild(label);
  });
  return svg;
}
