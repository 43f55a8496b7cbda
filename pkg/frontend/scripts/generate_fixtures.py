"""Regenerate the shared UI fixtures from the core package.

Emits, for 20 seeded scenes:
  golden_##.json   canonical annotation bundle bytes (the export target)
  result_##.json   the service/batch result for that bundle (preview truth)

Run from the repository root:  python frontend/scripts/generate_fixtures.py
"""

import json
import pathlib
import sys

from camloc.annotations import parse_bundle, serialize_bundle
from camloc.pipeline import run_pipeline
from camloc.synthetic import generate_scene, render_bundles
from camloc import wire

OUT = pathlib.Path(__file__).parent.parent / "test" / "fixtures"


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    index = []
    for i in range(20):
        scene = generate_scene(100 + i)
        bundle = render_bundles(scene, 1, 0.6, seed=i, include_refs=(i % 2 == 0))[0]
        data = serialize_bundle(bundle)
        assert parse_bundle(data) == bundle
        (OUT / f"golden_{i:02d}.json").write_bytes(data)

        result = run_pipeline([bundle], refs=bundle.refs)
        doc = wire.result_to_doc(result)
        (OUT / f"result_{i:02d}.json").write_text(json.dumps(doc, indent=2) + "\n")
        index.append({"golden": f"golden_{i:02d}.json", "result": f"result_{i:02d}.json"})
    (OUT / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    print(f"wrote {len(index)} fixture pairs to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
