/**
 * Canvas overlay rendering and hit testing.
 *
 * Rendering draws the in-progress annotation (segments color-coded per
 * axis, car-axis points, references) plus whatever the last service
 * preview returned (vanishing points clamped to the frame edge with
 * direction arrows, the orthocenter, candidate pins in a side list).
 */

import { AXIS_COLORS, CAR_POINT_COLOR, ORTHOCENTER_COLOR, REF_COLOR, VP_MARKER_COLOR } from './colors.js';
import type { PreviewFeedback } from './preview.js';
import { AXIS_TAGS, CAR_POINT_NAMES, pixelDistance, type AxisTag, type Pixel, type SessionState } from './types.js';

export interface SegmentHit {
  axis: AxisTag;
  index: number;
  endpoint: 'a' | 'b';
}

/** Nearest grabbable segment endpoint within `radius` px, if any. */
export function hitTestSegments(
  state: SessionState,
  at: Pixel,
  radius = 8,
): SegmentHit | null {
  let best: SegmentHit | null = null;
  let bestDistance = radius;
  for (const axis of AXIS_TAGS) {
    state.parallelSets[axis].forEach((segment, index) => {
      for (const endpoint of ['a', 'b'] as const) {
        const d = pixelDistance(segment[endpoint], at);
        if (d <= bestDistance) {
          bestDistance = d;
          best = { axis, index, endpoint };
        }
      }
    });
  }
  return best;
}

/** Clamp an off-frame point onto the frame border along the ray from `from`. */
export function clampToFrame(from: Pixel, to: Pixel, width: number, height: number): Pixel {
  const dx = to.u - from.u;
  const dy = to.v - from.v;
  let t = 1.0;
  if (to.u < 0 && dx !== 0) t = Math.min(t, (0 - from.u) / dx);
  if (to.u > width && dx !== 0) t = Math.min(t, (width - from.u) / dx);
  if (to.v < 0 && dy !== 0) t = Math.min(t, (0 - from.v) / dy);
  if (to.v > height && dy !== 0) t = Math.min(t, (height - from.v) / dy);
  return { u: from.u + t * dx, v: from.v + t * dy };
}

function drawDisk(ctx: CanvasRenderingContext2D, p: Pixel, r: number, fill: string): void {
  ctx.beginPath();
  ctx.arc(p.u, p.v, r, 0, 2 * Math.PI);
  ctx.fillStyle = fill;
  ctx.fill();
}

function drawSegment(ctx: CanvasRenderingContext2D, a: Pixel, b: Pixel, color: string, width: number): void {
  ctx.beginPath();
  ctx.moveTo(a.u, a.v);
  ctx.lineTo(b.u, b.v);
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.stroke();
}

export function renderOverlay(
  ctx: CanvasRenderingContext2D,
  state: SessionState,
  preview: PreviewFeedback | null,
  image: CanvasImageSource | null,
): void {
  const [width, height] = state.imageSize;
  ctx.clearRect(0, 0, width, height);
  if (image) {
    ctx.drawImage(image, 0, 0, width, height);
  } else {
    ctx.fillStyle = '#263238';
    ctx.fillRect(0, 0, width, height);
  }

  for (const axis of AXIS_TAGS) {
    for (const segment of state.parallelSets[axis]) {
      drawSegment(ctx, segment.a, segment.b, AXIS_COLORS[axis], 2.5);
      drawDisk(ctx, segment.a, 3.5, AXIS_COLORS[axis]);
      drawDisk(ctx, segment.b, 3.5, AXIS_COLORS[axis]);
    }
  }

  for (const name of CAR_POINT_NAMES) {
    const p = state.carAxes[name];
    if (!p) continue;
    drawDisk(ctx, p, 5, CAR_POINT_COLOR);
    ctx.fillStyle = CAR_POINT_COLOR;
    ctx.font = '12px sans-serif';
    ctx.fillText(name, p.u + 7, p.v - 7);
    if (name !== 'origin' && state.carAxes.origin) {
      const axis: AxisTag = name === 'x_end' ? 'x' : name === 'y_end' ? 'y' : 'z';
      drawSegment(ctx, state.carAxes.origin, p, AXIS_COLORS[axis], 1.0);
    }
  }

  for (const ref of state.refs) {
    drawDisk(ctx, ref.pixel, 5, REF_COLOR);
    ctx.fillStyle = REF_COLOR;
    ctx.fillText(`${ref.geo.lat.toFixed(6)}, ${ref.geo.lon.toFixed(6)}`, ref.pixel.u + 7, ref.pixel.v + 12);
  }

  if (preview?.vanishing) {
    const center: Pixel = { u: width / 2, v: height / 2 };
    for (const axis of AXIS_TAGS) {
      const vp = preview.vanishing.vanishing_points[axis];
      if (!vp || !vp.finite || !vp.point) continue;
      const target: Pixel = { u: vp.point[0], v: vp.point[1] };
      const inFrame = target.u >= 0 && target.u <= width && target.v >= 0 && target.v <= height;
      const marker = inFrame ? target : clampToFrame(center, target, width, height);
      drawDisk(ctx, marker, 6, VP_MARKER_COLOR);
      ctx.strokeStyle = AXIS_COLORS[axis];
      ctx.setLineDash([6, 6]);
      drawSegment(ctx, center, marker, AXIS_COLORS[axis], 1.0);
      ctx.setLineDash([]);
    }
    const orthocenter = preview.vanishing.orthocenter;
    if (orthocenter) {
      const p: Pixel = { u: orthocenter[0], v: orthocenter[1] };
      drawSegment(ctx, { u: p.u - 10, v: p.v }, { u: p.u + 10, v: p.v }, ORTHOCENTER_COLOR, 2);
      drawSegment(ctx, { u: p.u, v: p.v - 10 }, { u: p.u, v: p.v + 10 }, ORTHOCENTER_COLOR, 2);
    }
  }
}

/** Human-readable candidate lines for the side panel. */
export function candidateLines(preview: PreviewFeedback | null): string[] {
  if (!preview?.relative) return [];
  return preview.relative.absolute_candidates.map(
    (c) =>
      `${c.branch}: ${c.lat.toFixed(6)}, ${c.lon.toFixed(6)} ` +
      `(h ${c.height_m.toFixed(1)} m, d ${c.distance_to_ref_m.toFixed(1)} m)`,
  );
}
