"""Command-line entry point: match, refine, eval, correlate, ontosim."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .embeddings import EmbeddingParseError, LabelEmbedder, load_embeddings, load_synonyms
from .evaluation import (
    SCOPES,
    evaluate,
    jaccard_similarity,
    load_oaei_reference,
    load_reference,
    ontology_similarity,
    pearson,
    restrict_pairs,
    threshold_sweep,
    ReferenceAlignment,
)
from .matching import DEFAULT_TOPK, WEIGHTINGS, CandidateSet, extract_candidates, global_couple
from .ontology import OntologyLoadError, load_ontology
from .records import (
    RecordFormatError,
    read_alignment_pairs,
    read_candidates,
    write_alignment,
    write_candidates,
    write_curve,
)
from .refinement import DEFAULT_METRIC, Alignment, filter_alignment, parse_metric, score_candidates
from .transport import DEFAULT_MAX_ITER, DEFAULT_TOL, SolverError

logger = logging.getLogger("wassmatch")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3
# used by refine when neither --threshold nor --reference is given
FALLBACK_THRESHOLD = 0.30


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _unit_interval(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must lie in [0, 1], got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _existing(path: str) -> Path:
    p = Path(path).resolve()
    if not p.is_file():
        raise InputError(f"file not found: {path}")
    return p


def _solver_kwargs(args) -> dict:
    kwargs = {"max_iter": args.max_iter, "tol": args.tol}
    if args.epsilon is not None:
        kwargs["epsilon"] = args.epsilon
    return kwargs


def _solver_header(args) -> dict:
    return {
        "epsilon": "auto (0.01 * mean cost)" if args.epsilon is None else repr(args.epsilon),
        "max_iter": args.max_iter,
        "tol": repr(args.tol),
    }


def _load_embedder(args) -> LabelEmbedder:
    store = load_embeddings(_existing(args.embeddings))
    synonyms = load_synonyms(_existing(args.synonyms)) if args.synonyms else None
    return LabelEmbedder(store, synonyms)


def cmd_match(args) -> int:
    emb_path = _existing(args.embeddings)
    src_path, tgt_path = _existing(args.source), _existing(args.target)
    embedder = _load_embedder(args)
    source, target = load_ontology(src_path), load_ontology(tgt_path)

    gc = global_couple(source, target, embedder, weighting=args.weighting, **_solver_kwargs(args))
    if not gc.converged:
        bad = [k for k, p in gc.partitions.items() if not p.coupling.converged]
        msg = f"sinkhorn did not converge for partitions: {', '.join(bad)}"
        if args.strict:
            print(f"wassmatch match: error: {msg}", file=sys.stderr)
            return EXIT_SOLVER
        logger.warning(msg)
    cands = extract_candidates(gc, args.extraction, args.k)

    header = {
        "command": "match",
        "embeddings": emb_path,
        "synonyms": Path(args.synonyms).resolve() if args.synonyms else "none",
        "source": src_path,
        "target": tgt_path,
        "source_id": source.id,
        "target_id": target.id,
        "weighting": args.weighting,
        "extraction": args.extraction if args.extraction == "mnn" else f"topk (k={args.k})",
        **_solver_header(args),
        "partitions": ", ".join(
            f"{k} {len(p.source_iris)}x{len(p.target_iris)} wd={p.coupling.wd!r}"
            for k, p in gc.partitions.items()
        ),
        "candidates": len(cands),
    }
    for w in gc.warnings:
        header.setdefault("warnings", "")
        header["warnings"] = (header["warnings"] + "; " + w).lstrip("; ")
    write_candidates(args.output, cands, header)
    print(f"wrote {len(cands)} candidates to {args.output}", file=sys.stderr)
    return EXIT_OK


def _load_reference(path, fmt: str, scope: str) -> ReferenceAlignment:
    path = _existing(path)
    if fmt == "oaei":
        return load_oaei_reference(path, scope)
    return load_reference(path, scope)


def _format_report(rep) -> str:
    return (
        f"threshold\t{rep.threshold:.2f}\n"
        f"precision\t{rep.precision:.4f}\n"
        f"recall\t{rep.recall:.4f}\n"
        f"f1\t{rep.f1:.4f}\n"
        f"true_positive\t{rep.true_positive}\n"
        f"predicted\t{rep.predicted}\n"
        f"reference\t{rep.reference}"
    )


def cmd_refine(args) -> int:
    try:
        parse_metric(args.metric)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    emb_path = _existing(args.embeddings)
    src_path, tgt_path = _existing(args.source), _existing(args.target)
    cand_path = _existing(args.candidates)
    embedder = _load_embedder(args)
    source, target = load_ontology(src_path), load_ontology(tgt_path)
    cands, cand_header = read_candidates(cand_path)

    if args.scope == "classes_only":
        keep = restrict_pairs(cands.pairs(), source, target, args.scope)
        cands = CandidateSet(cands.method, [c for c in cands.candidates if (c.source_iri, c.target_iri) in keep],
                             cands.source_onto, cands.target_onto, cands.k)

    scored = score_candidates(cands, source, target, embedder, args.metric, **_solver_kwargs(args))

    header = {
        "command": "refine",
        "embeddings": emb_path,
        "synonyms": Path(args.synonyms).resolve() if args.synonyms else "none",
        "source": src_path,
        "target": tgt_path,
        "candidates": cand_path,
        "candidate_extraction": cand_header.get("extraction", cands.method),
        "metric": args.metric,
        "scope": args.scope,
        **_solver_header(args),
    }

    if args.reference:
        ref = _load_reference(args.reference, args.reference_format, args.scope)
        ref = ReferenceAlignment(frozenset(restrict_pairs(ref.pairs, source, target, args.scope)), args.scope)
        header["reference"] = _existing(args.reference)
        if args.threshold is None:
            best, curve = threshold_sweep(scored, ref, args.metric)
            threshold = best.threshold
            curve_path = args.curve or f"{args.output}.curve"
            header["threshold"] = f"{threshold:.2f} (best F1 of sweep)"
            write_curve(curve_path, curve, header)
            print(f"wrote 101-point curve to {curve_path}", file=sys.stderr)
        else:
            threshold = args.threshold
            header["threshold"] = f"{threshold:.2f}"
        alignment = filter_alignment(scored, threshold, args.metric)
        rep = evaluate(alignment, ref)
        header.update(precision=repr(rep.precision), recall=repr(rep.recall), f1=repr(rep.f1))
        print(_format_report(rep))
    else:
        threshold = FALLBACK_THRESHOLD if args.threshold is None else args.threshold
        header["threshold"] = f"{threshold:.2f}"
        alignment = filter_alignment(scored, threshold, args.metric)

    header["correspondences"] = len(alignment)
    write_alignment(args.output, alignment, header)
    print(f"wrote {len(alignment)} correspondences to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    corr, header = read_alignment_pairs(_existing(args.alignment))
    ref = _load_reference(args.reference, args.reference_format, args.scope)
    threshold = 0.0
    if "threshold" in header:
        try:
            threshold = float(header["threshold"].split()[0])
        except ValueError:
            pass
    predicted = {(s, t) for s, t, _ in corr}
    ref_pairs = set(ref.pairs)
    if args.scope == "classes_only":
        if not (args.source and args.target):
            raise UsageError("--scope classes_only needs --source and --target to identify classes")
        source, target = load_ontology(_existing(args.source)), load_ontology(_existing(args.target))
        predicted = restrict_pairs(predicted, source, target, args.scope)
        ref_pairs = restrict_pairs(ref_pairs, source, target, args.scope)
    alignment = Alignment([(s, t, 1.0) for s, t in sorted(predicted)], threshold)
    print(_format_report(evaluate(alignment, ReferenceAlignment(frozenset(ref_pairs), args.scope))))
    return EXIT_OK


def _read_cases_file(path) -> list[tuple[str, str, str]]:
    cases = []
    base = Path(path).resolve().parent
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise InputError(f"{path}:{lineno}: expected '<source>\\t<target>\\t<reference>'")
            cases.append(tuple(str(base / f) for f in fields))
    return cases


def cmd_correlate(args) -> int:
    cases = [tuple(c) for c in (args.case or [])]
    if args.cases:
        cases.extend(_read_cases_file(_existing(args.cases)))
    if not cases:
        raise UsageError("give at least one --case SOURCE TARGET REFERENCE or a --cases file")
    embedder = _load_embedder(args)

    rows = []
    for src, tgt, ref in cases:
        source, target = load_ontology(_existing(src)), load_ontology(_existing(tgt))
        reference = _load_reference(ref, args.reference_format, "classes_only")
        matches = restrict_pairs(reference.pairs, source, target, "classes_only")
        wd, ws = ontology_similarity(source, target, embedder, **_solver_kwargs(args))
        jac = jaccard_similarity(source.class_count, target.class_count, len(matches))
        rows.append((f"{source.id}-{target.id}", wd, ws, jac))

    lines = [
        "# wassmatch correlate",
        f"# embeddings: {Path(args.embeddings).resolve()}",
        "case\twd\tws\tjaccard",
    ]
    lines += [f"{name}\t{wd!r}\t{ws!r}\t{jac!r}" for name, wd, ws, jac in rows]
    try:
        pcc = pearson([r[2] for r in rows], [r[3] for r in rows])
    except ValueError as exc:
        text = "\n".join(lines) + "\n"
        _emit(args.output, text)
        raise InputError(f"cannot correlate: {exc}") from None
    lines.append(f"# pcc: {pcc!r}")
    _emit(args.output, "\n".join(lines) + "\n")
    print(f"pcc\t{pcc:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_ontosim(args) -> int:
    embedder = _load_embedder(args)
    source, target = load_ontology(_existing(args.source)), load_ontology(_existing(args.target))
    wd, ws = ontology_similarity(source, target, embedder, **_solver_kwargs(args))
    print(f"wd\t{wd!r}\nws\t{ws!r}")
    return EXIT_OK


def _emit(output, text: str):
    if output and output != "-":
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_embedding_flags(p):
    p.add_argument("--embeddings", required=True, help="word-vector text file (.vec format)")
    p.add_argument("--synonyms", help="optional token<TAB>replacement synonym file")


def _add_solver_flags(p):
    p.add_argument("--epsilon", type=_positive_float, default=None,
                   help="entropic regularization (default: 0.01 * mean cost)")
    p.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)


def _add_reference_format(p):
    p.add_argument("--reference-format", choices=("tsv", "oaei"), default="tsv",
                   help="reference file format: tab-separated pairs or OAEI alignment XML")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wassmatch", description="Ontology matching with Wasserstein distances over label embeddings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("match", help="global coupling and candidate extraction")
    _add_embedding_flags(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--weighting", choices=WEIGHTINGS, default="uniform")
    p.add_argument("--extraction", choices=("mnn", "topk"), default="topk")
    p.add_argument("--k", type=_positive_int, default=DEFAULT_TOPK)
    _add_solver_flags(p)
    p.add_argument("--strict", action="store_true", help="exit 3 if sinkhorn does not converge")
    p.add_argument("--output", required=True, help="candidate file to write")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("refine", help="score candidates and threshold them into an alignment")
    _add_embedding_flags(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--metric", default=DEFAULT_METRIC)
    p.add_argument("--threshold", type=_unit_interval, default=None)
    p.add_argument("--reference", help="reference alignment; without --threshold this runs the sweep")
    _add_reference_format(p)
    p.add_argument("--scope", choices=SCOPES, default="all")
    p.add_argument("--curve", help="sweep curve output (default: <output>.curve)")
    _add_solver_flags(p)
    p.add_argument("--output", required=True, help="alignment file to write")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="precision/recall/F1 of an alignment file")
    p.add_argument("--alignment", required=True)
    p.add_argument("--reference", required=True)
    _add_reference_format(p)
    p.add_argument("--scope", choices=SCOPES, default="all")
    p.add_argument("--source")
    p.add_argument("--target")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("correlate", help="Wasserstein vs Jaccard ontology similarity over cases")
    _add_embedding_flags(p)
    p.add_argument("--case", nargs=3, action="append", metavar=("SOURCE", "TARGET", "REFERENCE"))
    p.add_argument("--cases", help="file of tab-separated source/target/reference paths")
    _add_reference_format(p)
    _add_solver_flags(p)
    p.add_argument("--output", default="-", help="table output (default: stdout)")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("ontosim", help="Wasserstein distance/similarity between two ontologies")
    _add_embedding_flags(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_ontosim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    prog = f"wassmatch {args.command}"
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FileNotFoundError, EmbeddingParseError, OntologyLoadError,
            RecordFormatError, KeyError, ValueError) as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"{prog}: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
