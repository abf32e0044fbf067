#!/usr/bin/env python3
"""Independent re-derivation of the end-to-end fixture.

Reads the fixture inputs (manifest, pinned encoder vectors, scripted LLM,
knowledge-base files) and recomputes every construction rule without the
C++ library: hashing, mock embeddings, the three Stage-1 filters, the
recaption exclusion, candidate parsing, both argmax selections, and the
graph and index serialization. Writes the golden files the C++ tests
compare against, or with --check verifies the committed ones are current.
"""

import argparse
import json
import math
import re
import struct
import sys
from pathlib import Path

MASK = (1 << 64) - 1
AUDIO_DIM = 4
VIDEO_DIM = 6
MIN_COS = 0.2
DROP_FRACTION = 0.10
VETO = {"speech", "audio"}
MAX_DESC = 5
SPACES = " \t\n\r\f\v"


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def splitmix64(state):
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def mock_embed(kind: str, payload: str, dim: int):
    rng = splitmix64(fnv1a64(f"{kind}\x1f{payload}".encode()))
    raw = []
    sq = 0.0
    for _ in range(dim):
        x = 2.0 * ((next(rng) >> 11) * 2.0**-53) - 1.0
        raw.append(x)
        sq += x * x
    n = math.sqrt(sq)
    return [f32(x / n) for x in raw]


def dot(a, b):
    acc = 0.0
    for x, y in zip(a, b):
        acc += x * y
    return acc


def norm(a):
    return math.sqrt(dot(a, a))


def cosine(a, b):
    return min(1.0, max(-1.0, dot(a, b) / (norm(a) * norm(b))))


def normalize_surface(s: str) -> str:
    return " ".join(w for w in re.split(f"[{re.escape(SPACES)}]+", s) if w)


class Encoder:
    def __init__(self, family, dims, fixture):
        self.dims = dims
        self.pinned = {}
        for v in fixture["vectors"]:
            if v.get("family", family) == family and v["kind"] in dims:
                self.pinned[(v["kind"], v["payload"])] = [f32(x) for x in v["values"]]
        self.tags = fixture["tags"]

    def embed(self, kind, payload):
        return self.pinned.get((kind, payload)) or mock_embed(kind, payload, self.dims[kind])


class Llm:
    def __init__(self, rules):
        self.rules = [(re.compile(r["pattern"]), r["response"]) for r in rules]

    def complete(self, prompt):
        for rx, response in self.rules:
            m = rx.search(prompt)
            if m:
                return re.sub(r"\$(\d|&)", lambda g: m.group(0 if g.group(1) == "&" else int(g.group(1))),
                              response)
        raise KeyError(prompt)


def strip_marker(line):
    line = line.strip(SPACES)
    if line[:1] in ("-", "*"):
        return line[1:].strip(SPACES)
    m = re.match(r"(\d+)[.)](.*)$", line, re.S)
    if m and m.group(2):
        return m.group(2).strip(SPACES)
    return line


def parse_candidates(text):
    out = []
    for raw in text.split("\n"):
        line = strip_marker(raw)
        if not line:
            continue
        parts = None
        if line.startswith("("):
            close = line.rfind(")")
            if close > 0 and line[close + 1:].strip(SPACES) in ("", ".", ","):
                parts = line[1:close].split(";")
        elif "|" in line:
            parts = line.split("|")
        if parts and len(parts) == 3:
            h, r, t = (normalize_surface(p) for p in parts)
            if h and r and t:
                out.append((h, r, t))
    return out


def argmax_first(scores):
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return best


def collect_descriptions(term, wiki, wikt, llm):
    out = []

    def take(text, source):
        text = normalize_surface(text)
        if text and len(out) < MAX_DESC and text not in [d[0] for d in out]:
            out.append((text, source))

    for table, source in ((wiki, "wikipedia"), (wikt, "wiktionary")):
        if len(out) >= MAX_DESC:
            break
        for text in table.get(term, []):
            take(text, source)
    if len(out) < MAX_DESC:
        reply = llm.complete(f"\nConcept: {term}\nDescriptions:")
        for line in reply.split("\n"):
            take(strip_marker(line), "llm")
    return out


def index_bytes(entries, dim):
    body = bytearray(b"VKGIDX1\0")
    body += struct.pack("<IBIQ", 1, 0, dim, len(entries))
    for tid, vec in entries:
        body += struct.pack("<I", len(tid)) + tid.encode()
        body += struct.pack(f"<{dim}f", *vec)
    body += struct.pack("<Q", fnv1a64(bytes(body)))
    return bytes(body)


def dump(value) -> str:
    return json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def derive(fixture_dir: Path):
    manifest = [json.loads(l) for l in (fixture_dir / "manifest.jsonl").read_text().splitlines() if l.strip()]
    enc_fixture = json.loads((fixture_dir / "encoders.json").read_text())
    audio = Encoder("audio", {"text": AUDIO_DIM, "audio": AUDIO_DIM}, enc_fixture)
    video = Encoder("video", {k: VIDEO_DIM for k in ("text", "video", "image", "video_conditioned")},
                    enc_fixture)
    llm = Llm(json.loads((fixture_dir / "llm_script.json").read_text()))
    wiki = json.loads((fixture_dir / "kb" / "wikipedia.json").read_text())
    wikt = json.loads((fixture_dir / "kb" / "wiktionary.json").read_text())

    samples = sorted(manifest, key=lambda s: s["id"])
    reports = []

    def report(stage, before, after):
        kept = {s["id"] for s in after}
        reports.append({"stage": stage, "input": len(before), "kept": len(after),
                        "dropped_ids": [s["id"] for s in before if s["id"] not in kept], "errors": []})
        return after

    alive = samples
    alive = report("VoiceOver", alive, [
        s for s in alive
        if not VETO <= {t.strip().lower() for t in audio.tags[s["audio_uri"]]}])

    audio_emb = {}
    kept = []
    for s in alive:
        a = audio.embed("audio", s["audio_uri"])
        audio_emb[s["id"]] = a
        if not cosine(a, audio.embed("text", s["caption"])) < MIN_COS:
            kept.append(s)
    alive = report("AudioText", alive, kept)

    video_emb = {s["id"]: video.embed("video", s["video_uri"]) for s in alive}
    scored = sorted(((cosine(video_emb[s["id"]], video.embed("text", s["caption"])), s["id"]) for s in alive))
    n_drop = math.floor(DROP_FRACTION * len(alive))
    dropped = {sid for _, sid in scored[:n_drop]}
    alive = report("VideoText", alive, [s for s in alive if s["id"] not in dropped])

    recap = {}
    for s in alive:
        if "frame_count" in s:
            s["center_frame"] = s["frame_count"] // 2
        if "title" in s and "description" in s:
            prompt = (f"Caption: {normalize_surface(s['caption'])}\nTitle: {normalize_surface(s['title'])}\n"
                      f"Description: {normalize_surface(s['description'])}\n\nRefined caption:")
            recap[s["id"]] = normalize_surface(llm.complete(prompt))
    alive = report("Recaption", alive, [s for s in alive if s["id"] in recap])
    for s in alive:
        s["recaption"] = recap[s["id"]]

    grounded = {}
    for s in alive:
        cands = parse_candidates(llm.complete(f"\nCaption: {s['recaption']}\nTriplets:"))
        scores = [dot(video.embed("text", f"{h} {r} {t}"), video_emb[s["id"]]) for h, r, t in cands]
        grounded[s["id"]] = (cands, scores, argmax_first(scores))
    alive = report("Grounding", alive, alive)

    terms = sorted({term for s in alive for term in
                    (grounded[s["id"]][0][grounded[s["id"]][2]][0], grounded[s["id"]][0][grounded[s["id"]][2]][2])})
    concepts = {t: collect_descriptions(t, wiki, wikt, llm) for t in terms}

    triplets = []
    for s in alive:
        cands, scores, best = grounded[s["id"]]
        h, r, t = cands[best]

        def pick(term):
            cond = video.embed("video_conditioned", f"{s['video_uri']}\x1f{term}")
            return argmax_first([dot(cond, video.embed("text", d)) for d, _ in concepts[term]])

        hi = pick(h)
        ti = hi if t == h else pick(t)
        tid = "%016x" % fnv1a64(f"{s['id']}\x1f{h}\x1f{r}\x1f{t}".encode())
        triplets.append({"triplet_id": tid, "head": h, "relation": r, "tail": t, "sample": s["id"],
                         "head_desc_idx": hi, "tail_desc_idx": ti})
    alive = report("Alignment", alive, alive)

    graph = {
        "schema": "vatkg-graph/1",
        "concepts": [{"surface": c, "candidates": [{"text": d, "source": src} for d, src in concepts[c]]}
                     for c in sorted(concepts)],
        "triplets": triplets,
        "samples": [{k: v for k, v in s.items()} for s in alive],
    }

    by_id = {s["id"]: s for s in alive}
    indexes = {
        "index_audio.vkgidx": index_bytes([(t["triplet_id"], audio_emb[t["sample"]]) for t in triplets], AUDIO_DIM),
        "index_video.vkgidx": index_bytes([(t["triplet_id"], video_emb[t["sample"]]) for t in triplets], VIDEO_DIM),
        "index_text.vkgidx": index_bytes(
            [(t["triplet_id"], video.embed("text", f"{t['head']} {t['relation']} {t['tail']}")) for t in triplets],
            VIDEO_DIM),
        "index_joint.vkgidx": index_bytes(
            [(t["triplet_id"], joint(audio_emb[t["sample"]], video_emb[t["sample"]])) for t in triplets],
            AUDIO_DIM + VIDEO_DIM),
    }

    expected = {
        "stages": {r["stage"]: {"input": r["input"], "kept": r["kept"], "dropped": r["dropped_ids"]} for r in reports},
        "triplets": [
            {"id": t["triplet_id"], "sentence": f"{t['head']} {t['relation']} {t['tail']}", "sample": t["sample"],
             "head_description": concepts[t["head"]][t["head_desc_idx"]][0],
             "tail_description": concepts[t["tail"]][t["tail_desc_idx"]][0],
             "center_frame": by_id[t["sample"]].get("center_frame")}
            for t in triplets],
        "concept_count": len(concepts),
    }
    return {
        "graph.json": dump(graph).encode(),
        "stage_report.json": dump({"stages": reports}).encode(),
        "expected.json": dump(expected).encode(),
        **indexes,
    }


def joint(a, v):
    na, nv = norm(a), norm(v)
    return [f32(x / na) for x in a] + [f32(x / nv) for x in v]


def main():
    here = Path(__file__).resolve().parent
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixture", type=Path, default=here.parent / "fixtures" / "e2e")
    ap.add_argument("--check", action="store_true", help="fail if the committed golden files differ")
    args = ap.parse_args()
    golden = args.fixture / "golden"
    outputs = derive(args.fixture)
    if args.check:
        stale = [name for name, data in outputs.items()
                 if not (golden / name).exists() or (golden / name).read_bytes() != data]
        if stale:
            print("stale golden files: " + ", ".join(stale))
            return 1
        print(f"{len(outputs)} golden files match")
        return 0
    golden.mkdir(exist_ok=True)
    for name, data in outputs.items():
        (golden / name).write_bytes(data)
    print(f"wrote {len(outputs)} files to {golden}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
