/**
 * Canonical bundle serialization, byte-compatible with the core parser.
 *
 * Canonical form: schema key order, two-space indent, integral numbers
 * written without a decimal point, trailing newline.  JSON.stringify
 * already renders integral doubles bare and uses shortest round-trip
 * decimals, which matches the core's canonical writer as long as values
 * stay inside the exponent-free range (|x| in [1e-4, 1e15] or 0) -- true
 * for pixels, geodetic degrees, and meter dimensions.
 */

import type { Pixel, SessionState } from './types.js';

function pixelDoc(p: Pixel): [number, number] {
  return [p.u, p.v];
}

/** The plain JSON object tree in canonical key order. */
export function sessionToDocument(state: SessionState): Record<string, unknown> {
  const axes = state.carAxes;
  if (!axes.origin || !axes.x_end || !axes.y_end || !axes.z_end) {
    throw new Error('car axes incomplete');
  }
  const doc: Record<string, unknown> = {
    version: 1,
    image_id: state.imageId,
    image_size: [state.imageSize[0], state.imageSize[1]],
    annotator_id: state.annotatorId,
    car_axes: {
      origin: pixelDoc(axes.origin),
      x_end: pixelDoc(axes.x_end),
      y_end: pixelDoc(axes.y_end),
      z_end: pixelDoc(axes.z_end),
    },
    parallel_sets: {
      x: state.parallelSets.x.map((s) => [pixelDoc(s.a), pixelDoc(s.b)]),
      y: state.parallelSets.y.map((s) => [pixelDoc(s.a), pixelDoc(s.b)]),
      z: state.parallelSets.z.map((s) => [pixelDoc(s.a), pixelDoc(s.b)]),
    },
  };
  if (state.dims) {
    doc.dims = {
      length_m: state.dims.length_m,
      width_m: state.dims.width_m,
      height_m: state.dims.height_m,
    };
  }
  if (state.refs.length > 0) {
    doc.refs = state.refs.map((r) => ({
      pixel: pixelDoc(r.pixel),
      geo: { lat: r.geo.lat, lon: r.geo.lon },
    }));
  }
  return doc;
}

/** Canonical bytes of the export document. */
export function serializeSession(state: SessionState): Uint8Array {
  const text = JSON.stringify(sessionToDocument(state), null, 2) + '\n';
  return new TextEncoder().encode(text);
}

/** Parse a bundle document back into session state (import path). */
export function documentToSession(text: string): SessionState {
  const doc = JSON.parse(text) as Record<string, any>;
  if (doc.version !== 1) {
    throw new Error(`unsupported bundle version ${doc.version}`);
  }
  const px = (pair: [number, number]): Pixel => ({ u: pair[0], v: pair[1] });
  const seg = (pair: [[number, number], [number, number]]) => ({
    a: px(pair[0]),
    b: px(pair[1]),
  });
  return {
    imageId: doc.image_id,
    imageSize: [doc.image_size[0], doc.image_size[1]],
    annotatorId: doc.annotator_id,
    carAxes: {
      origin: px(doc.car_axes.origin),
      x_end: px(doc.car_axes.x_end),
      y_end: px(doc.car_axes.y_end),
      z_end: px(doc.car_axes.z_end),
    },
    parallelSets: {
      x: doc.parallel_sets.x.map(seg),
      y: doc.parallel_sets.y.map(seg),
      z: doc.parallel_sets.z.map(seg),
    },
    ...(doc.dims ? { dims: doc.dims } : {}),
    refs: (doc.refs ?? []).map((r: any) => ({ pixel: px(r.pixel), geo: r.geo })),
  };
}
