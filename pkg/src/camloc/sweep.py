"""Batch synthetic sweeps: reproduce the error CDFs at desk scale.

A scenario config (JSON) names the trial count, seeds, annotator count and
the pixel-noise grid; each trial generates a scene, renders noisy bundles,
runs the full pipeline, and scores the estimate.  Reports carry the sigma
they were calibrated at -- the real annotator error distribution is
unknown, so these envelopes are regression baselines, not ground truth.
"""

from __future__ import annotations

import json

from .errors import CamlocError, SchemaViolation
from .pipeline import run_pipeline
from .synthetic import (
    DEFAULT_RANGES,
    ErrorReport,
    LocationEstimate,
    SceneRanges,
    SyntheticScene,
    evaluate_errors,
    generate_scene,
    render_bundles,
)


def relative_sweep(scene_count: int, base_seed: int, annotators: int,
                   sigma_px: float, include_refs: bool = False,
                   ranges: SceneRanges = DEFAULT_RANGES,
                   seeds: list[int] | None = None
                   ) -> tuple[ErrorReport, list[SyntheticScene]]:
    """Run the relative (and optionally two-reference absolute) pipeline
    over seeded scenes and score the results.  Seeds default to
    base_seed .. base_seed + scene_count - 1."""
    scenes = []
    estimates = []
    failures = 0
    for i in (seeds if seeds is not None else range(base_seed, base_seed + scene_count)):
        scene = generate_scene(int(i), ranges)
        bundles = render_bundles(scene, annotators, sigma_px, seed=int(i),
                                 include_refs=include_refs)
        refs = bundles[0].refs if include_refs else None
        try:
            result = run_pipeline(bundles, dims=scene.car_dims, refs=refs)
        except CamlocError:
            failures += 1
            continue
        geo = result.absolute_candidates[0].geo if result.absolute_candidates else None
        scenes.append(scene)
        estimates.append(LocationEstimate(position=result.camera_position, geo=geo))
    report = evaluate_errors(estimates, scenes)
    return report, scenes


def run_config(config_doc: dict) -> dict:
    """Execute a scenario config document and return the report document.

    Recognized fields: scenes, base_seed (or an explicit seeds list),
    annotators, sigma_px or sigma_grid, include_refs, and ranges -- a
    partial override of the SceneRanges fields, e.g.
    {"camera_height_m": [4, 12], "camera_distance_m": [5, 30]}.
    """
    if not isinstance(config_doc, dict):
        raise SchemaViolation("", "scenario config must be a JSON object")
    scene_count = int(config_doc.get("scenes", 200))
    base_seed = int(config_doc.get("base_seed", 0))
    annotators = int(config_doc.get("annotators", 10))
    include_refs = bool(config_doc.get("include_refs", False))
    seeds = None
    if "seeds" in config_doc:
        if not isinstance(config_doc["seeds"], list):
            raise SchemaViolation("seeds", "expected an array of integers")
        seeds = [int(s) for s in config_doc["seeds"]]
        scene_count = len(seeds)
    ranges = DEFAULT_RANGES
    if "ranges" in config_doc:
        overrides = config_doc["ranges"]
        if not isinstance(overrides, dict):
            raise SchemaViolation("ranges", "expected an object of range overrides")
        valid = set(SceneRanges.__dataclass_fields__)
        unknown = set(overrides) - valid
        if unknown:
            raise SchemaViolation(f"ranges.{sorted(unknown)[0]}", "unknown range field")
        coerced = {key: tuple(value) if isinstance(value, list) else value
                   for key, value in overrides.items()}
        ranges = SceneRanges(**coerced)
    if "sigma_grid" in config_doc:
        grid = [float(s) for s in config_doc["sigma_grid"]]
    else:
        grid = [float(config_doc.get("sigma_px", 1.0))]
    sweeps = []
    for sigma in grid:
        report, _ = relative_sweep(scene_count, base_seed, annotators, sigma,
                                   include_refs=include_refs, ranges=ranges,
                                   seeds=seeds)
        sweeps.append({"sigma_px": sigma, "report": json.loads(report.to_json())})
    return {
        "scenes": scene_count,
        "base_seed": base_seed,
        "annotators": annotators,
        "sweeps": sweeps,
    }
