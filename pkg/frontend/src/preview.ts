/**
 * Live preview client over the computation service.
 *
 * The UI never computes geometry locally: every number rendered in an
 * overlay originates verbatim from a service response.  Requests carry a
 * monotonically increasing id; a response is applied only if no newer
 * response has been applied already, so out-of-order arrivals can never
 * overwrite fresher previews.  Network failures degrade to "no preview"
 * and never touch session data.
 */

import { sessionToDocument } from './serialize.js';
import type { AxisTag, SessionState } from './types.js';

export interface VanishingPointDoc {
  finite: boolean;
  homogeneous: number[];
  point?: [number, number];
  error?: { code: string; message: string };
}

export interface VanishingPreview {
  vanishing_points: Record<AxisTag, VanishingPointDoc | null>;
  orthocenter: [number, number] | null;
  hints: string[];
}

export interface RelativePreview {
  intrinsics: { fx: number; fy: number; cx: number; cy: number };
  rotation: number[][];
  translation: { tx: number; ty: number; tz: number };
  camera_position: { x: number; y: number; z: number };
  camera_height_m: number;
  quality: Record<string, number>;
  warnings: string[];
  absolute_candidates: Array<{
    lat: number;
    lon: number;
    height_m: number;
    branch: string;
    distance_to_ref_m: number;
  }>;
}

export interface PreviewFeedback {
  requestId: number;
  vanishing: VanishingPreview | null;
  relative: RelativePreview | null;
  hints: string[];
}

type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

function segmentsDoc(state: SessionState): Record<string, unknown> {
  const sets: Record<string, unknown> = {};
  for (const axis of ['x', 'y', 'z'] as const) {
    if (state.parallelSets[axis].length > 0) {
      sets[axis] = state.parallelSets[axis].map((s) => [
        [s.a.u, s.a.v],
        [s.b.u, s.b.v],
      ]);
    }
  }
  return sets;
}

function exportReady(state: SessionState): boolean {
  const axes = state.carAxes;
  return Boolean(
    axes.origin &&
      axes.x_end &&
      axes.y_end &&
      axes.z_end &&
      state.parallelSets.x.length >= 2 &&
      state.parallelSets.y.length >= 2 &&
      state.parallelSets.z.length >= 2,
  );
}

export class PreviewClient {
  private nextId = 0;
  private appliedId = 0;
  private latest: PreviewFeedback | null = null;

  constructor(
    private readonly fetchFn: FetchLike,
    private readonly baseUrl: string = '',
  ) {}

  get current(): PreviewFeedback | null {
    return this.latest;
  }

  private async post(path: string, body: unknown): Promise<any | null> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(body),
      });
      if (!response.ok) {
        // Estimation errors come back structured; surface them as hints.
        const detail = await response.json().catch(() => null);
        return { __error: detail };
      }
      return await response.json();
    } catch {
      return null; // offline: degrade to no preview, never lose data
    }
  }

  /**
   * Request a preview for the session.  Returns the applied feedback, or
   * null when the response was stale, offline, or below the minimum
   * annotation (two segments in at least one set).
   */
  async requestPreview(state: SessionState): Promise<PreviewFeedback | null> {
    const hasAnySet = (['x', 'y', 'z'] as const).some(
      (axis) => state.parallelSets[axis].length >= 2,
    );
    if (!hasAnySet) return null;
    const requestId = ++this.nextId;

    const hints: string[] = [];
    const vanishing = (await this.post('/api/v1/vanishing-points', {
      parallel_sets: segmentsDoc(state),
    })) as (VanishingPreview & { __error?: { message?: string } }) | null;
    let vanishingOut: VanishingPreview | null = null;
    if (vanishing && !('__error' in vanishing && vanishing.__error)) {
      vanishingOut = vanishing;
      hints.push(...vanishing.hints);
    } else if (vanishing?.__error?.message) {
      hints.push(vanishing.__error.message);
    }

    let relativeOut: RelativePreview | null = null;
    if (exportReady(state)) {
      const body: Record<string, unknown> = { bundle: sessionToDocument(state) };
      const relative = (await this.post('/api/v1/relative', body)) as
        | (RelativePreview & { __error?: { message?: string } })
        | null;
      if (relative && !('__error' in relative && relative.__error)) {
        relativeOut = relative;
      } else if (relative?.__error?.message) {
        hints.push(relative.__error.message);
      }
    }

    if (requestId <= this.appliedId) {
      return null; // a newer response already painted the overlay
    }
    this.appliedId = requestId;
    this.latest = { requestId, vanishing: vanishingOut, relative: relativeOut, hints };
    return this.latest;
  }
}
