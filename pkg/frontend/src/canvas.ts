/** 2D-context probe, cached process-wide: headless DOMs without canvas
 * support answer once instead of erroring on every draw. */

let usable: boolean | null = null;

export function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  if (usable === false) return null;
  let ctx: CanvasRenderingContext2D | null = null;
  try {
    ctx = canvas.getContext("2d");
  } catch {
    ctx = null;
  }
  usable = ctx !== null;
  return ctx;
}
