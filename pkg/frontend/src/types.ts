/** Shared annotation types mirroring the bundle document schema. */

export type AxisTag = 'x' | 'y' | 'z';

export interface Pixel {
  u: number;
  v: number;
}

export interface Segment {
  a: Pixel;
  b: Pixel;
}

export interface GeoPoint {
  lat: number;
  lon: number;
}

export interface RefEntry {
  pixel: Pixel;
  geo: GeoPoint;
}

export interface CarDims {
  length_m: number;
  width_m: number;
  height_m: number;
}

export type CarPointName = 'origin' | 'x_end' | 'y_end' | 'z_end';

export interface CarAxesDraft {
  origin?: Pixel;
  x_end?: Pixel;
  y_end?: Pixel;
  z_end?: Pixel;
}

/** Everything an annotation session accumulates for one image. */
export interface SessionState {
  imageId: string;
  imageSize: [number, number];
  annotatorId: string;
  carAxes: CarAxesDraft;
  parallelSets: Record<AxisTag, Segment[]>;
  dims?: CarDims;
  refs: RefEntry[];
}

export const CAR_POINT_NAMES: readonly CarPointName[] = ['origin', 'x_end', 'y_end', 'z_end'];
export const AXIS_TAGS: readonly AxisTag[] = ['x', 'y', 'z'];

export function clonePixel(p: Pixel): Pixel {
  return { u: p.u, v: p.v };
}

export function cloneState(s: SessionState): SessionState {
  return {
    imageId: s.imageId,
    imageSize: [s.imageSize[0], s.imageSize[1]],
    annotatorId: s.annotatorId,
    carAxes: {
      ...(s.carAxes.origin ? { origin: clonePixel(s.carAxes.origin) } : {}),
      ...(s.carAxes.x_end ? { x_end: clonePixel(s.carAxes.x_end) } : {}),
      ...(s.carAxes.y_end ? { y_end: clonePixel(s.carAxes.y_end) } : {}),
      ...(s.carAxes.z_end ? { z_end: clonePixel(s.carAxes.z_end) } : {}),
    },
    parallelSets: {
      x: s.parallelSets.x.map((seg) => ({ a: clonePixel(seg.a), b: clonePixel(seg.b) })),
      y: s.parallelSets.y.map((seg) => ({ a: clonePixel(seg.a), b: clonePixel(seg.b) })),
      z: s.parallelSets.z.map((seg) => ({ a: clonePixel(seg.a), b: clonePixel(seg.b) })),
    },
    ...(s.dims ? { dims: { ...s.dims } } : {}),
    refs: s.refs.map((r) => ({ pixel: clonePixel(r.pixel), geo: { ...r.geo } })),
  };
}

export function pixelDistance(a: Pixel, b: Pixel): number {
  return Math.hypot(a.u - b.u, a.v - b.v);
}
