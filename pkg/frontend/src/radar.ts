/** Four-axis radar chart: current preference (filled) over persona
 * target (outline). The raw values are mirrored onto data attributes so
 * the state is inspectable without pixel access (and testable under
 * jsdom, which has no 2D context). */

import { context2d } from "./canvas.js";
import { DIMENSIONS, type PreferenceVector } from "./types.js";

function points(
  values: PreferenceVector,
  cx: number,
  cy: number,
  radius: number,
): [number, number][] {
  return DIMENSIONS.map((dim, i) => {
    const angle = -Math.PI / 2 + (i * Math.PI) / 2;
    const r = radius * values[dim];
    return [cx + r * Math.cos(angle), cy + r * Math.sin(angle)];
  });
}

function tracePolygon(ctx: CanvasRenderingContext2D, pts: [number, number][]): void {
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
  ctx.closePath();
}

export function drawRadar(
  canvas: HTMLCanvasElement,
  current: PreferenceVector,
  target: PreferenceVector,
): void {
  canvas.dataset.current = JSON.stringify(current);
  canvas.dataset.target = JSON.stringify(target);
  const ctx = context2d(canvas);
  if (!ctx) return;

  const cx = canvas.width / 2;
  const cy = canvas.height / 2;
  const radius = Math.min(cx, cy) - 18;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  ctx.strokeStyle = "#d0d7de";
  ctx.fillStyle = "#57606a";
  ctx.font = "10px sans-serif";
  ctx.textAlign = "center";
  for (const fraction of [0.25, 0.5, 0.75, 1.0]) {
    tracePolygon(
      ctx,
      DIMENSIONS.map((_, i) => {
        const angle = -Math.PI / 2 + (i * Math.PI) / 2;
        return [
          cx + radius * fraction * Math.cos(angle),
          cy + radius * fraction * Math.sin(angle),
        ] as [number, number];
      }),
    );
    ctx.stroke();
  }
  DIMENSIONS.forEach((dim, i) => {
    const angle = -Math.PI / 2 + (i * Math.PI) / 2;
    ctx.fillText(
      dim,
      cx + (radius + 12) * Math.cos(angle),
      cy + (radius + 12) * Math.sin(angle) + 3,
    );
  });

  ctx.strokeStyle = "#9a6700";
  ctx.setLineDash([4, 3]);
  tracePolygon(ctx, points(target, cx, cy, radius));
  ctx.stroke();
  ctx.setLineDash([]);

  ctx.strokeStyle = "#0969da";
  ctx.fillStyle = "rgba(9, 105, 218, 0.25)";
  tracePolygon(ctx, points(current, cx, cy, radius));
  ctx.fill();
  ctx.stroke();
}
