/**
 * Annotation session: gesture handling, undo history, export gating.
 *
 * Gestures mutate the session only when they keep it structurally sound
 * (finite pixels inside the sanity window, segments at least 2 px long,
 * car-axis points pairwise distinct); a rejected gesture leaves the
 * session byte-identical.  Undo restores the exact prior state.  Export
 * is refused until the bundle invariants hold -- estimate quality never
 * gates it (previews are advisory).
 */

import { serializeSession } from './serialize.js';
import {
  AXIS_TAGS,
  CAR_POINT_NAMES,
  cloneState,
  pixelDistance,
  type AxisTag,
  type CarDims,
  type CarPointName,
  type GeoPoint,
  type Pixel,
  type SessionState,
} from './types.js';

const MIN_SEGMENT_PX = 2.0;
const MIN_POINT_SEPARATION_PX = 1.0;

export type Gesture =
  | { kind: 'add-segment'; axis: AxisTag; a: Pixel; b: Pixel }
  | { kind: 'move-segment'; axis: AxisTag; index: number; a: Pixel; b: Pixel }
  | { kind: 'delete-segment'; axis: AxisTag; index: number }
  | { kind: 'set-car-point'; point: CarPointName; pixel: Pixel }
  | { kind: 'clear-car-point'; point: CarPointName }
  | { kind: 'add-ref'; pixel: Pixel; geo: GeoPoint }
  | { kind: 'delete-ref'; index: number }
  | { kind: 'set-dims'; dims: CarDims }
  | { kind: 'clear-dims' };

export interface ExportGate {
  ok: boolean;
  reasons: string[];
}

export class AnnotationSession {
  private state: SessionState;
  private history: SessionState[] = [];

  constructor(imageId: string, imageSize: [number, number], annotatorId: string) {
    this.state = {
      imageId,
      imageSize,
      annotatorId,
      carAxes: {},
      parallelSets: { x: [], y: [], z: [] },
      refs: [],
    };
  }

  static fromState(state: SessionState): AnnotationSession {
    const session = new AnnotationSession(state.imageId, state.imageSize, state.annotatorId);
    session.state = cloneState(state);
    return session;
  }

  snapshot(): SessionState {
    return cloneState(this.state);
  }

  get undoDepth(): number {
    return this.history.length;
  }

  private withinWindow(p: Pixel): boolean {
    const [w, h] = this.state.imageSize;
    return (
      Number.isFinite(p.u) &&
      Number.isFinite(p.v) &&
      p.u >= -1.5 * w &&
      p.u <= 2.5 * w &&
      p.v >= -1.5 * h &&
      p.v <= 2.5 * h
    );
  }

  private carPointAcceptable(point: CarPointName, pixel: Pixel): boolean {
    if (!this.withinWindow(pixel)) return false;
    for (const name of CAR_POINT_NAMES) {
      if (name === point) continue;
      const other = this.state.carAxes[name];
      if (other && pixelDistance(other, pixel) <= MIN_POINT_SEPARATION_PX) return false;
    }
    return true;
  }

  /** Apply a gesture; returns false (and changes nothing) when rejected. */
  applyGesture(gesture: Gesture): boolean {
    const next = cloneState(this.state);
    switch (gesture.kind) {
      case 'add-segment': {
        if (!this.withinWindow(gesture.a) || !this.withinWindow(gesture.b)) return false;
        if (pixelDistance(gesture.a, gesture.b) < MIN_SEGMENT_PX) return false;
        next.parallelSets[gesture.axis].push({ a: gesture.a, b: gesture.b });
        break;
      }
      case 'move-segment': {
        const set = next.parallelSets[gesture.axis];
        if (gesture.index < 0 || gesture.index >= set.length) return false;
        if (!this.withinWindow(gesture.a) || !this.withinWindow(gesture.b)) return false;
        if (pixelDistance(gesture.a, gesture.b) < MIN_SEGMENT_PX) return false;
        set[gesture.index] = { a: gesture.a, b: gesture.b };
        break;
      }
      case 'delete-segment': {
        const set = next.parallelSets[gesture.axis];
        if (gesture.index < 0 || gesture.index >= set.length) return false;
        set.splice(gesture.index, 1);
        break;
      }
      case 'set-car-point': {
        if (!this.carPointAcceptable(gesture.point, gesture.pixel)) return false;
        next.carAxes[gesture.point] = gesture.pixel;
        break;
      }
      case 'clear-car-point': {
        if (!next.carAxes[gesture.point]) return false;
        delete next.carAxes[gesture.point];
        break;
      }
      case 'add-ref': {
        if (!this.withinWindow(gesture.pixel)) return false;
        const { lat, lon } = gesture.geo;
        if (!(lat >= -90 && lat <= 90 && lon > -180 && lon <= 180)) return false;
        next.refs.push({ pixel: gesture.pixel, geo: gesture.geo });
        break;
      }
      case 'delete-ref': {
        if (gesture.index < 0 || gesture.index >= next.refs.length) return false;
        next.refs.splice(gesture.index, 1);
        break;
      }
      case 'set-dims': {
        const { length_m, width_m, height_m } = gesture.dims;
        const sane = (x: number) => x > 0.5 && x < 30;
        if (!(sane(length_m) && sane(width_m) && sane(height_m))) return false;
        next.dims = gesture.dims;
        break;
      }
      case 'clear-dims': {
        if (!next.dims) return false;
        delete next.dims;
        break;
      }
    }
    this.history.push(this.state);
    this.state = next;
    return true;
  }

  /** Restore the exact prior state; false when nothing to undo. */
  undo(): boolean {
    const prior = this.history.pop();
    if (!prior) return false;
    this.state = prior;
    return true;
  }

  /** Structural invariants gate the export, never estimate quality. */
  exportGate(): ExportGate {
    const reasons: string[] = [];
    for (const name of CAR_POINT_NAMES) {
      if (!this.state.carAxes[name]) reasons.push(`car axes: ${name} not set`);
    }
    for (const axis of AXIS_TAGS) {
      const n = this.state.parallelSets[axis].length;
      if (n < 2) reasons.push(`${axis}-set has ${n} segment(s); needs at least 2`);
    }
    return { ok: reasons.length === 0, reasons };
  }

  /** Canonical export bytes; throws when the gate is closed. */
  exportDocument(): Uint8Array {
    const gate = this.exportGate();
    if (!gate.ok) {
      throw new Error(`export blocked: ${gate.reasons.join('; ')}`);
    }
    return serializeSession(this.state);
  }
}
