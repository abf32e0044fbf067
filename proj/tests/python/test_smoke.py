import math
import os
from pathlib import Path

import pytest

import vatkg

FIXTURES = Path(os.environ.get("VATKG_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))
E2E = FIXTURES / "e2e"


def test_mock_embed_is_unit_and_deterministic():
    v = vatkg.mock_embed("text", "a dog barks", 16)
    assert len(v) == 16
    assert math.isclose(math.sqrt(sum(x * x for x in v)), 1.0, rel_tol=1e-6)
    assert v == vatkg.mock_embed("text", "a dog barks", 16)


def test_index_search_save_load(tmp_path):
    index = vatkg.build_index([("b", [0.0, 1.0]), ("a", [1.0, 0.0]), ("c", [1.0, 0.0])], "l2")
    assert len(index) == 3 and index.dim == 2 and index.metric == "l2"
    hits = index.search([1.0, 0.1], k=2)
    assert [h[0] for h in hits] == ["a", "c"]
    assert index.search([1.0, 0.1], k=3, threshold=0.5) == hits
    index.save(tmp_path / "i.vkgidx")
    assert vatkg.load_index(tmp_path / "i.vkgidx").search([1.0, 0.1], 2) == hits


def test_errors_carry_codes(tmp_path):
    with pytest.raises(vatkg.VatkgError) as e:
        vatkg.build_index([("a", [1.0]), ("a", [2.0])])
    assert e.value.code == "DuplicateId"
    (tmp_path / "bad.vkgidx").write_bytes(b"nope")
    with pytest.raises(vatkg.VatkgError) as e:
        vatkg.load_index(tmp_path / "bad.vkgidx")
    assert e.value.code in {"BadMagic", "ChecksumMismatch"}


def test_filters_and_parsing():
    assert vatkg.voice_over_filter(["Speech", "audio", "music", "dog", "rain"])
    assert not vatkg.voice_over_filter(["speech", "music", "dog", "rain", "wind"])
    assert not vatkg.audio_text_filter([1, 0, 0, 0], [1, 2, 4, 2])
    kept, dropped = vatkg.video_text_percentile_filter([(f"s{i:02d}", i / 10) for i in range(20)])
    assert dropped == ["s00", "s01"] and len(kept) == 18
    assert vatkg.parse_candidate_triplets("(quokka; IsA; mammal)\nnoise") == [("quokka", "IsA", "mammal")]
    assert vatkg.triplet_id("s01", "quokka", "IsA", "mammal") == "445a51ee40492712"


def test_build_query_stats_roundtrip(tmp_path):
    out = tmp_path / "kg"
    summary = vatkg.build(E2E / "manifest.jsonl", out, config=E2E / "vatkg.conf")
    assert summary["triplets"] == 7
    assert (out / "graph.json").read_bytes() == (E2E / "golden" / "graph.json").read_bytes()
    trace = vatkg.query(out, {"question": "What is hopping?", "modality": "text", "text": "quokka",
                              "config": {"checker_min_cos": -1}}, config=E2E / "vatkg.conf", dry_run=True)
    assert "answer" not in trace and len(trace["hits"]) == 5
    assert vatkg.stats(out)["stats"]["triplets"] == 7
    assert vatkg.inspect_triplet(out, "445a51ee40492712")["sentence"] == "quokka IsA mammal"
    with pytest.raises(vatkg.CliError) as e:
        vatkg.stats(tmp_path / "missing")
    assert e.value.exit_code == 5
