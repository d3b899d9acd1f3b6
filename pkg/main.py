import argparse
import sys

from dotenv import load_dotenv

from cli.commands import (
    UsageError,
    check_global_flags,
    cmd_classify,
    cmd_clt,
    cmd_embed,
    cmd_generate,
    cmd_oos,
    cmd_pipeline,
    cmd_rates,
    cmd_tradeoff,
)
from rdpg.errors import RDPGError
from tools.format import format_box

load_dotenv()


def welcome():
    content = [
        "🕸️ RDPG out-of-sample embedding",
        "",
        "Spectral embeddings of random dot product graphs, out-of-sample",
        "extensions for new vertices, and the experiments that check them.",
    ]
    print("\n" + format_box(content, width=90) + "\n")


def _int_list(text: str):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def build_parser() -> argparse.ArgumentParser:
    # --seed / --workers are accepted before or after the subcommand
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Master seed (env RDPG_OOS_SEED).")
    shared.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="Parallel workers (env RDPG_OOS_WORKERS).")

    parser = argparse.ArgumentParser(prog="rdpg-oos", description="RDPG spectral embedding and out-of-sample extension.")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[shared], help="Sample a graph, its latent positions and an OOS vertex.")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out-graph", required=True)
    p.add_argument("--out-latent", required=True)
    p.add_argument("--out-oos")
    p.add_argument("--atom", type=int)

    p = sub.add_parser("embed", parents=[shared], help="ASE or LSE of an edge-list graph.")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=["ase", "lse"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("oos", parents=[shared], help="Extend an embedding to one new vertex.")
    p.add_argument("--embedding", required=True)
    p.add_argument("--oos", required=True)
    p.add_argument("--method", choices=["lls-ase", "ml-ase", "lls-lse"], required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("clt", parents=[shared], help="CLT experiment: records CSV and summary JSON.")
    p.add_argument("--config", required=True)
    p.add_argument("--out-records", required=True)
    p.add_argument("--out-summary", required=True)

    p = sub.add_parser("rates", parents=[shared], help="Error-rate experiment over a grid of n.")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("tradeoff", parents=[shared], help="In-sample versus OOS classification error sweep.")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--m", type=_int_list, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", parents=[shared], help="Empirical classification error, OOS versus joint embedding.")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", parents=[shared], help="generate -> embed -> oos into one directory.")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--embedding", choices=["ase", "lse"], default="ase")
    p.add_argument("--method", choices=["lls-ase", "ml-ase", "lls-lse"])
    p.add_argument("--atom", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out-dir", required=True)

    return parser


def run(args: argparse.Namespace):
    check_global_flags(args.seed, args.workers)
    if args.command == "generate":
        return cmd_generate(args.dist, args.n, args.out_graph, args.out_latent,
                            out_oos=args.out_oos, atom=args.atom, seed=args.seed)
    if args.command == "embed":
        return cmd_embed(args.graph, args.method, args.d, args.out)
    if args.command == "oos":
        return cmd_oos(args.embedding, args.oos, args.method, args.out,
                       epsilon=args.epsilon, max_iterations=args.max_iterations)
    if args.command == "clt":
        return cmd_clt(args.config, args.out_records, args.out_summary, seed=args.seed, workers=args.workers)
    if args.command == "rates":
        return cmd_rates(args.config, args.out, seed=args.seed, workers=args.workers)
    if args.command == "tradeoff":
        return cmd_tradeoff(args.lam, args.p, args.q, args.n, args.m, args.out)
    if args.command == "classify":
        return cmd_classify(args.lam, args.p, args.q, args.n, args.m, args.trials, args.out,
                            seed=args.seed, workers=args.workers)
    if args.command == "pipeline":
        welcome()
        return cmd_pipeline(args.dist, args.n, args.d, args.out_dir, embedding=args.embedding,
                            method=args.method, atom=args.atom, epsilon=args.epsilon, seed=args.seed)
    raise UsageError(f"unknown command '{args.command}'")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        run(args)
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2
    except RDPGError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
