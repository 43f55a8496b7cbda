/** Browser entry: wires the session, canvas, and preview client together. */

import { candidateLines, hitTestSegments, renderOverlay } from './canvas.js';
import { AXIS_COLORS } from './colors.js';
import { PreviewClient } from './preview.js';
import { documentToSession } from './serialize.js';
import { AnnotationSession, type Gesture } from './session.js';
import type { AxisTag, CarPointName, Pixel } from './types.js';

type ToolMode =
  | { kind: 'segment'; axis: AxisTag }
  | { kind: 'car-point'; point: CarPointName }
  | { kind: 'ref' };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setup(): void {
  const canvas = el<HTMLCanvasElement>('annotation-canvas');
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('canvas 2d context unavailable');

  let session = new AnnotationSession('image-000', [canvas.width, canvas.height], 'annotator-ui');
  const preview = new PreviewClient((url, init) => fetch(url, init));
  let image: HTMLImageElement | null = null;
  let mode: ToolMode = { kind: 'segment', axis: 'x' };
  let dragStart: Pixel | null = null;

  const statusLine = el<HTMLDivElement>('status');
  const hintsList = el<HTMLUListElement>('hints');
  const candidatesList = el<HTMLUListElement>('candidates');

  const repaint = () => {
    renderOverlay(ctx, session.snapshot(), preview.current, image);
    const gate = session.exportGate();
    el<HTMLButtonElement>('export').disabled = !gate.ok;
    statusLine.textContent = gate.ok
      ? 'ready to export'
      : gate.reasons.join(' | ');
    hintsList.replaceChildren(
      ...(preview.current?.hints ?? []).map((hint) => {
        const li = document.createElement('li');
        li.textContent = hint;
        return li;
      }),
    );
    candidatesList.replaceChildren(
      ...candidateLines(preview.current).map((line) => {
        const li = document.createElement('li');
        li.textContent = line;
        return li;
      }),
    );
  };

  const refreshPreview = () => {
    void preview.requestPreview(session.snapshot()).then((feedback) => {
      if (feedback) repaint();
    });
  };

  const applyAndRefresh = (gesture: Gesture) => {
    if (session.applyGesture(gesture)) {
      repaint();
      refreshPreview();
    }
  };

  const canvasPixel = (event: MouseEvent): Pixel => {
    const rect = canvas.getBoundingClientRect();
    return {
      u: ((event.clientX - rect.left) / rect.width) * canvas.width,
      v: ((event.clientY - rect.top) / rect.height) * canvas.height,
    };
  };

  canvas.addEventListener('mousedown', (event) => {
    const at = canvasPixel(event);
    if (mode.kind === 'segment') {
      dragStart = at;
    } else if (mode.kind === 'car-point') {
      applyAndRefresh({ kind: 'set-car-point', point: mode.point, pixel: at });
    } else {
      const lat = Number(el<HTMLInputElement>('ref-lat').value);
      const lon = Number(el<HTMLInputElement>('ref-lon').value);
      applyAndRefresh({ kind: 'add-ref', pixel: at, geo: { lat, lon } });
    }
  });

  canvas.addEventListener('mouseup', (event) => {
    if (mode.kind !== 'segment' || !dragStart) return;
    const start = dragStart;
    dragStart = null;
    const end = canvasPixel(event);
    const hit = hitTestSegments(session.snapshot(), start);
    if (hit && hit.axis === mode.axis) {
      const segment = session.snapshot().parallelSets[hit.axis][hit.index];
      if (!segment) return;
      const moved =
        hit.endpoint === 'a' ? { a: end, b: segment.b } : { a: segment.a, b: end };
      applyAndRefresh({ kind: 'move-segment', axis: hit.axis, index: hit.index, ...moved });
    } else {
      applyAndRefresh({ kind: 'add-segment', axis: mode.axis, a: start, b: end });
    }
  });

  for (const axis of ['x', 'y', 'z'] as const) {
    const button = el<HTMLButtonElement>(`tool-${axis}`);
    button.style.borderColor = AXIS_COLORS[axis];
    button.addEventListener('click', () => {
      mode = { kind: 'segment', axis };
    });
  }
  for (const point of ['origin', 'x_end', 'y_end', 'z_end'] as const) {
    el<HTMLButtonElement>(`tool-${point}`).addEventListener('click', () => {
      mode = { kind: 'car-point', point };
    });
  }
  el<HTMLButtonElement>('tool-ref').addEventListener('click', () => {
    mode = { kind: 'ref' };
  });

  el<HTMLButtonElement>('undo').addEventListener('click', () => {
    if (session.undo()) {
      repaint();
      refreshPreview();
    }
  });

  el<HTMLButtonElement>('export').addEventListener('click', () => {
    const bytes = session.exportDocument();
    const blob = new Blob([new TextDecoder().decode(bytes)], { type: 'application/json' });
    const link = document.createElement('a');
    link.href = URL.createObjectURL(blob);
    link.download = `${session.snapshot().imageId}.json`;
    link.click();
    URL.revokeObjectURL(link.href);
  });

  el<HTMLInputElement>('import-file').addEventListener('change', async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    session = AnnotationSession.fromState(documentToSession(await file.text()));
    repaint();
    refreshPreview();
  });

  el<HTMLInputElement>('image-file').addEventListener('change', async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const url = URL.createObjectURL(file);
    const img = new Image();
    img.onload = () => {
      image = img;
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      session = new AnnotationSession(
        file.name.replace(/\.[^.]+$/, ''),
        [img.naturalWidth, img.naturalHeight],
        'annotator-ui',
      );
      repaint();
    };
    img.src = url;
  });

  repaint();
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', setup);
}
