/** Per-dimension trajectory sparkline over the session's turns. Values
 * are mirrored onto a data attribute for inspection without pixels. */

import { context2d } from "./canvas.js";

export function drawSparkline(canvas: HTMLCanvasElement, values: number[]): void {
  canvas.dataset.values = JSON.stringify(values);
  const ctx = context2d(canvas);
  if (!ctx) return;

  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#d0d7de";
  ctx.beginPath();
  ctx.moveTo(0, h - 2);
  ctx.lineTo(w, h - 2);
  ctx.stroke();

  if (values.length === 0) return;
  const step = values.length > 1 ? (w - 8) / (values.length - 1) : 0;
  const y = (v: number) => h - 4 - v * (h - 8);
  ctx.strokeStyle = "#0969da";
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = 4 + i * step;
    i === 0 ? ctx.moveTo(x, y(v)) : ctx.lineTo(x, y(v));
  });
  ctx.stroke();
  const last = values[values.length - 1];
  ctx.fillStyle = "#0969da";
  ctx.beginPath();
  ctx.arc(4 + (values.length - 1) * step, y(last), 2.5, 0, Math.PI * 2);
  ctx.fill();
}
