"""Line-delimited record files: candidates, alignments and sweep curves.

Every file opens with ``#``-prefixed header lines (``# key: value``) echoing
the configuration that produced it. Candidate and alignment files follow
with one tab-separated column header line and the records; curve files
hold one ``threshold precision recall f1`` line per sweep point.
"""

from __future__ import annotations

from pathlib import Path

from .matching import Candidate, CandidateSet

CANDIDATE_COLUMNS = ("source_iri", "target_iri", "coupling_mass", "method", "label_euclidean")
ALIGNMENT_COLUMNS = ("source_iri", "target_iri", "score")


class RecordFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def _header_lines(kind: str, header: dict) -> list[str]:
    lines = [f"# wassmatch {kind}"]
    for key, value in header.items():
        lines.append(f"# {key}: {value}")
    return lines


def _write(path, lines):
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read(path, columns):
    header = {}
    rows = []
    seen_columns = False
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition(": ")
                if sep:
                    header[key] = value
                continue
            fields = line.split("\t")
            if not seen_columns:
                if tuple(fields) != columns:
                    raise RecordFormatError(f"{path}:{lineno}: expected column header {columns}, got {fields}")
                seen_columns = True
                continue
            if len(fields) != len(columns):
                raise RecordFormatError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(fields)}")
            rows.append((lineno, fields))
    if not seen_columns:
        raise RecordFormatError(f"{path}: missing column header line")
    return header, rows


def write_candidates(path, cands: CandidateSet, header: dict) -> None:
    method = "mnn" if cands.method == "mnn" else f"topk{cands.k}"
    lines = _header_lines("candidates", header) + ["\t".join(CANDIDATE_COLUMNS)]
    for c in cands.candidates:
        dist = "" if c.label_euclidean is None else _fmt(c.label_euclidean)
        lines.append("\t".join((c.source_iri, c.target_iri, _fmt(c.coupling_mass), method, dist)))
    _write(path, lines)


def read_candidates(path) -> tuple[CandidateSet, dict]:
    header, rows = _read(path, CANDIDATE_COLUMNS)
    cands = []
    methods = set()
    for lineno, (s, t, mass, method, dist) in rows:
        try:
            cand = Candidate(s, t, float(mass), float(dist) if dist else None)
        except ValueError:
            raise RecordFormatError(f"{path}:{lineno}: non-numeric coupling mass or distance") from None
        if not s or not t:
            raise RecordFormatError(f"{path}:{lineno}: empty iri")
        cands.append(cand)
        methods.add(method)
    if len(methods) > 1:
        raise RecordFormatError(f"{path}: mixed extraction methods {sorted(methods)}")
    method = methods.pop() if methods else header.get("extraction", "topk")
    k = None
    if method.startswith("topk"):
        k = int(method[4:]) if method[4:].isdigit() else None
        method = "topk"
    return CandidateSet(method, cands, header.get("source_id", ""), header.get("target_id", ""), k), header


def write_alignment(path, alignment, header: dict) -> None:
    lines = _header_lines("alignment", header) + ["\t".join(ALIGNMENT_COLUMNS)]
    for s, t, score in alignment.correspondences:
        lines.append("\t".join((s, t, _fmt(score))))
    _write(path, lines)


def read_alignment_pairs(path) -> tuple[list[tuple[str, str, float]], dict]:
    header, rows = _read(path, ALIGNMENT_COLUMNS)
    out = []
    for lineno, (s, t, score) in rows:
        try:
            out.append((s, t, float(score)))
        except ValueError:
            raise RecordFormatError(f"{path}:{lineno}: non-numeric score") from None
    return out, header


def write_curve(path, curve, header: dict) -> None:
    lines = _header_lines("curve", header)
    for rep in curve:
        lines.append(f"{rep.threshold:.2f} {rep.precision!r} {rep.recall!r} {rep.f1!r}")
    _write(path, lines)
