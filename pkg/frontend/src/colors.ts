/** Axis color coding: x red, y purple, z yellow (matches the worker UI). */

import type { AxisTag } from './types.js';

export const AXIS_COLORS: Record<AxisTag, string> = {
  x: '#e53935',
  y: '#8e24aa',
  z: '#fdd835',
};

export const CAR_POINT_COLOR = '#00e5ff';
export const ORTHOCENTER_COLOR = '#76ff03';
export const VP_MARKER_COLOR = '#ff9100';
export const REF_COLOR = '#40c4ff';
