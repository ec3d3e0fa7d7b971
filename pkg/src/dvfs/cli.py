"""Command-line driver: ``dvfs --config FILE <command> ...``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from dvfs import kernels
from dvfs.errors import DvfsError
from dvfs.fuzzy import DEFAULT_K, DEFAULT_WIDTH
from dvfs.harness import adversary, bench
from dvfs.harness.config import Config
from dvfs.harness.store import DocumentStore
from dvfs.harness.system import DvfsSystem, ingest
from dvfs.ledger import read_records
from dvfs.search import load_transcript

DEFAULT_CONFIG = "dvfs.conf"


def _system(args) -> DvfsSystem:
    return DvfsSystem.open(Config.load(args.config))


def cmd_setup(args) -> int:
    path = Path(args.config)
    if path.exists() and not args.force:
        print(f"{path} already exists (use --force to overwrite)", file=sys.stderr)
        return 1
    path.parent.mkdir(parents=True, exist_ok=True)
    cfg = Config.generate(path.parent, k=args.k, L=args.L, lsh_width=args.width,
                          debug_journal=args.debug_journal)
    cfg.save(path)
    print(f"wrote {path} (k={cfg.k} L={cfg.L} width={cfg.lsh_width})")
    return 0


def cmd_ingest(args) -> int:
    system = _system(args)
    n, skipped = ingest(system, args.dir)
    system.save()
    print(f"indexed {n} documents, skipped {skipped}")
    return 0


def cmd_add(args) -> int:
    system = _system(args)
    text = Path(args.file).read_text(encoding="utf-8")
    doc_id, kws = system.add_document(text, doc_id=args.id)
    system.save()
    print(f"doc {doc_id}: {len(kws)} keywords")
    return 0


def cmd_del(args) -> int:
    system = _system(args)
    system.delete_keyword(args.doc_id, args.keyword)
    system.save()
    print(f"deleted {args.keyword!r} from doc {args.doc_id}")
    return 0


def cmd_search(args) -> int:
    system = _system(args)
    q = system.search(args.keywords)
    system.save()
    print(f"seq {q.seq}: {len(q.results)} results {q.results}")
    if args.show_proof:
        for path, bit in q.transcript.ap:
            print(f"  AP /{path} {bit}")
    if args.out:
        Path(args.out).write_text(q.transcript.dumps(), encoding="ascii")
    if args.docs:
        out = DocumentStore(args.docs)
        for ct in q.ciphertexts:
            out.put(ct)
    if args.decrypt:
        for ct in q.ciphertexts:
            text = system.decrypt(ct).decode("utf-8", errors="replace")
            print(f"--- doc {ct.doc_id}\n{text.rstrip()}")
    return 0


def cmd_verify(args) -> int:
    system = _system(args)
    if args.seq is not None:
        transcript = system.ledger.transcript(args.seq)
    elif args.transcript:
        transcript = load_transcript(Path(args.transcript).read_text(encoding="ascii"))
    else:
        print("need --transcript or --seq", file=sys.stderr)
        return 2
    source = DocumentStore(args.docs) if args.docs else system.store
    wanted = set(transcript.results)
    cts = [source.fetch(i) for i in source.ids() if i in wanted]
    seq, report = system.verify(transcript, cts)
    print(f"seq {seq}: {report.line()}")
    return 0 if report.verdict == 1 else 1


def cmd_repo_show(args) -> int:
    system = _system(args)
    bucket = system.params.family.fuzzify(args.keyword)
    e = system.lr.get(bucket)
    if e is None:
        print(f"{bucket}: not in repository")
        return 1
    print(f"{bucket}: b={int(e.b)} v={e.v} n_add={e.n_add} n_del={e.n_del}")
    return 0


def cmd_ledger_validate(args) -> int:
    cfg = Config.load(args.config)
    n = len(read_records(cfg.path("ledger")))
    print(f"ok: {n} records")
    return 0


def cmd_ledger_show(args) -> int:
    cfg = Config.load(args.config)
    records = read_records(cfg.path("ledger"))
    if not 0 <= args.seq < len(records):
        print(f"no record {args.seq}", file=sys.stderr)
        return 1
    rec = records[args.seq]
    print(f"seq={rec.seq} kind={rec.kind.value} prev={rec.prev_hash.hex()} this={rec.this_hash.hex()}")
    try:
        print(rec.payload.decode("ascii").rstrip())
    except UnicodeDecodeError:
        print(rec.payload.hex())
    return 0


def cmd_index_stats(args) -> int:
    system = _system(args)
    idx = system.index
    print(f"height={idx.height} documents={idx.doc_count} main_entries={len(idx.entries)} "
          f"delete_entries={len(idx.delete_entries)} M={idx.entry_count} backend={kernels.BACKEND}")
    return 0


def _family(args):
    cfg = Config.load(args.config) if os.path.exists(args.config) else Config.generate(".")
    if args.width is not None:
        cfg.lsh_width = args.width
    return cfg.params().family


def cmd_bench_accuracy(args) -> int:
    fam = _family(args)
    rates = bench.accuracy(fam, args.sample, args.seed)
    for kind, rate in rates.items():
        print(f"{kind:9s} {rate * 100:6.1f}%")
    return 0


def cmd_bench_calibrate(args) -> int:
    fam = _family(args)
    c = bench.calibrate(fam, args.pairs, args.seed)
    print(f"width={fam.width} k={fam.k}")
    print(f"near (d <= sqrt3): {c.near_rate:.3f}  far (d >= 2): {c.far_rate:.3f}  "
          f"{'PASS' if c.passes() else 'FAIL'}")
    for d, (rate, count) in c.profile.items():
        print(f"  d={d:<6} rate={rate:.3f} n={count}")
    return 0 if c.passes() else 1


def cmd_bench_scaling(args) -> int:
    rows = bench.scaling(args.counts, results=args.results, decoys=args.decoys,
                         trials=args.trials, seed=args.seed)
    print("n      L   AP      probes  checks  digests  search_ms  verify_ms")
    for r in rows:
        print(f"{r.n:<6} {r.height:<3} {r.ap:<7.1f} {r.probes:<7.1f} {r.structural_checks:<7.1f} "
              f"{r.digest_recomputations:<8.1f} {r.search_ms:<10.3f} {r.verify_ms:.3f}")
    ns = [r.n for r in rows]
    for attr in ("ap", "probes"):
        lg, ln = bench.log_vs_linear(ns, [getattr(r, attr) for r in rows])
        print(f"{attr}: log fit {lg.c1:.2f} + {lg.c2:.2f}*log2(n) rel_res={lg.rel_residual:.3f}; "
              f"linear rel_res={ln.rel_residual:.3f}")
    return 0


def cmd_adversary(args) -> int:
    system = _system(args)
    report = adversary.run(system, args.mode, args.keywords, args.seed)
    system.save()
    print(report.line())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dvfs", description="Verifiable fuzzy encrypted search over a simulated ledger.")
    p.add_argument("--config", default=os.environ.get("DVFS_CONFIG", DEFAULT_CONFIG))
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", help="generate keys and a config file")
    s.add_argument("--k", type=int, default=DEFAULT_K)
    s.add_argument("--L", type=int, default=32)
    s.add_argument("--width", type=float, default=DEFAULT_WIDTH)
    s.add_argument("--debug-journal", action="store_true")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("ingest", help="index every file in a directory")
    s.add_argument("dir")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("add", help="index one document")
    s.add_argument("file")
    s.add_argument("--id", type=int)
    s.set_defaults(func=cmd_add)

    s = sub.add_parser("del", help="delete a keyword from a document")
    s.add_argument("doc_id", type=int)
    s.add_argument("keyword")
    s.set_defaults(func=cmd_del)

    s = sub.add_parser("search", help="conjunctive fuzzy search")
    s.add_argument("keywords", nargs="+")
    s.add_argument("--show-proof", action="store_true")
    s.add_argument("--out", help="write the transcript here")
    s.add_argument("--docs", help="copy returned ciphertexts into this directory")
    s.add_argument("--decrypt", action="store_true")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("verify", help="verify a transcript; exit 0 iff verdict 1")
    s.add_argument("--transcript")
    s.add_argument("--seq", type=int, help="use the transcript logged at this ledger seq")
    s.add_argument("--docs", help="directory of returned ciphertexts (default: the store)")
    s.set_defaults(func=cmd_verify)

    repo = sub.add_parser("repo").add_subparsers(dest="repo_cmd", required=True)
    s = repo.add_parser("show")
    s.add_argument("keyword")
    s.set_defaults(func=cmd_repo_show)

    ledger = sub.add_parser("ledger").add_subparsers(dest="ledger_cmd", required=True)
    ledger.add_parser("validate").set_defaults(func=cmd_ledger_validate)
    s = ledger.add_parser("show")
    s.add_argument("seq", type=int)
    s.set_defaults(func=cmd_ledger_show)

    index = sub.add_parser("index").add_subparsers(dest="index_cmd", required=True)
    index.add_parser("stats").set_defaults(func=cmd_index_stats)

    b = sub.add_parser("bench").add_subparsers(dest="bench_cmd", required=True)
    s = b.add_parser("accuracy")
    s.add_argument("--sample", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--width", type=float)
    s.set_defaults(func=cmd_bench_accuracy)
    s = b.add_parser("lsh-calibrate")
    s.add_argument("--pairs", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--width", type=float)
    s.set_defaults(func=cmd_bench_calibrate)
    s = b.add_parser("scaling")
    s.add_argument("--counts", type=int, nargs="+", default=[125, 250, 500, 1000])
    s.add_argument("--results", type=int, default=4)
    s.add_argument("--decoys", type=int, default=8)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_bench_scaling)

    s = sub.add_parser("adversary", help="search, corrupt the served documents, verify")
    s.add_argument("mode", choices=[m.value for m in adversary.Mode])
    s.add_argument("keywords", nargs="+")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_adversary)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DvfsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
