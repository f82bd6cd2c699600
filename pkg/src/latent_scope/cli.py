"""Command-line entry point: ``latent-scope <command> [options]``.

Exit statuses: 0 success, 2 usage or validation error, 3 I/O error,
4 numeric-domain error. Output files are written atomically, so a failed
run never leaves a partial file behind.
"""

import argparse
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import analysis, density, manifold, synthetic
from .embeddings_io import EmbeddingFormat, load_embeddings, save_embeddings
from .errors import ConfigurationError, LatentScopeError, NumericDomainError, ValidationError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


def _fmt(x):
    """9 significant digits; ``inf``/``nan`` spelled out."""
    return f"{x:.9g}"


def _json_num(x):
    x = float(x)
    if not np.isfinite(x):
        return None
    return float(_fmt(x))


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


class _Output:
    """Collects output text and commits it to a file or stdout at the end."""

    def __init__(self, path, fmt):
        self.path = path
        self.format = fmt
        self.buf = io.StringIO()

    def csv(self, header, rows):
        self.buf.write(",".join(header) + "\n")
        for row in rows:
            self.buf.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")

    def json(self, payload):
        payload = {"schema_version": SCHEMA_VERSION, **payload}
        self.buf.write(json.dumps(payload, indent=2) + "\n")

    def table(self, header, rows, key):
        """Write rows as CSV, or as a JSON object holding a list of records."""
        if self.format == "json":
            records = [
                {h: (_json_num(v) if isinstance(v, float) else v) for h, v in zip(header, row)}
                for row in rows
            ]
            self.json({key: records})
        else:
            self.csv(header, rows)

    def commit(self):
        text = self.buf.getvalue()
        if self.path in (None, "-"):
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        directory = os.path.dirname(os.path.abspath(self.path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".latent-scope-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _progress(done, total):
    print(f"scored {done}/{total}", file=sys.stderr, flush=True)


def _input_format(args):
    return EmbeddingFormat(kind=args.format, width=args.width, n_dims=args.dims)


def _load(args, attr):
    path = getattr(args, attr)
    if path is None:
        raise ValidationError(f"--{attr.replace('_', '-')} is required")
    return load_embeddings(path, _input_format(args))


def _config(args, sigma=None):
    return density.DensityConfig(
        sigma=args.sigma if sigma is None else sigma,
        chunk_rows=args.chunk_rows,
        threads=args.threads,
    )


# -- commands ---------------------------------------------------------------

def cmd_score(args, out):
    train, query = _load(args, "train"), _load(args, "query")
    scorer = density.DensityScorer(train, _config(args))
    scores = scorer.score(query, progress=_progress if args.progress else None)
    out.table(["index", "score"], [(i, float(s)) for i, s in enumerate(scores)], "scores")


def cmd_metrics(args, out):
    fake, real = _load(args, "fake"), _load(args, "real")
    report = manifold.compute_metrics(fake, real, k=args.k, k_density=args.k_density)
    payload = {
        name: (_json_num(v) if isinstance(v, float) else v) for name, v in report.as_dict().items()
    }
    if out.format == "csv":
        out.csv(list(payload), [list(report.as_dict().values())])
    else:
        out.json(payload)


def _read_scores(args):
    if args.scores is not None:
        table = load_embeddings(args.scores, _input_format(args))
        if table.shape[1] not in (1, 2):
            raise ValidationError(f"{args.scores}: a score file has 1 column or 2 (index, score)")
        return table[:, -1]
    train, query = _load(args, "train"), _load(args, "query")
    return density.DensityScorer(train, _config(args)).score(query)


def cmd_rank(args, out):
    scores = _read_scores(args)
    ranking = analysis.rank_by_score(scores)
    wanted = [(w, getattr(args, w)) for w in ("top", "middle", "bottom") if getattr(args, w) is not None]
    if not wanted:
        raise ValidationError("rank needs at least one of --top, --middle, --bottom")
    picks = {w: analysis.select(ranking, w, k) for w, k in wanted}
    if out.format == "json":
        out.json({w: {"indices": idx, "scores": [_json_num(scores[i]) for i in idx]} for w, idx in picks.items()})
    else:
        rows = [(w, pos, i, float(scores[i])) for w, idx in picks.items() for pos, i in enumerate(idx)]
        out.csv(["selection", "position", "index", "score"], rows)


def cmd_curve(args, out):
    fake, real = _load(args, "fake"), _load(args, "real")
    train = _load(args, "train") if args.train else real
    if args.ks is None:
        raise ValidationError("--ks is required")
    scores = density.DensityScorer(train, _config(args)).score(fake)
    points = analysis.topk_metric_curve(fake, real, analysis.rank_by_score(scores), args.ks, args.k)
    header = ["top_k", "precision", "recall", "mean_realism", "n_infinite_realism"]
    rows = [(p.top_k, p.precision, p.recall, p.mean_realism, p.n_infinite_realism) for p in points]
    out.table(header, rows, "curve")


def cmd_truncation_sweep(args, out):
    codes, train = _load(args, "query"), _load(args, "train")
    if args.psis is None:
        raise ValidationError("--psis is required")
    means = analysis.truncation_sweep(codes, train, args.psis, _config(args))
    out.table(["psi", "mean_score"], [(float(p), m) for p, m in zip(args.psis, means)], "sweep")


def cmd_edit(args, out):
    codes, train = _load(args, "query"), _load(args, "train")
    direction = load_embeddings(args.direction, _input_format(args))
    if direction.shape[0] != 1:
        raise ValidationError(f"{args.direction}: expected a single direction row, got {direction.shape[0]}")
    if args.alphas is None:
        raise ValidationError("--alphas is required")
    scores = analysis.edit_sweep(codes, train, direction[0], args.alphas, _config(args))
    rows = [(i, float(a), float(scores[i, j])) for i in range(scores.shape[0]) for j, a in enumerate(args.alphas)]
    out.table(["index", "alpha", "score"], rows, "scores")


def _sigmas(args):
    if not args.sigmas:
        raise ValidationError("--sigmas is required")
    return args.sigmas


def cmd_sigma_sweep(args, out):
    train, query = _load(args, "train"), _load(args, "query")
    sigmas = _sigmas(args)
    scores = density.sigma_sweep(query, train, sigmas, _config(args))
    rows = [(i, float(s), float(scores[i, j])) for i in range(scores.shape[0]) for j, s in enumerate(sigmas)]
    out.table(["index", "sigma", "score"], rows, "scores")


def cmd_sigma_recall(args, out):
    fake, real = _load(args, "fake"), _load(args, "real")
    sigmas = _sigmas(args)
    recalls = analysis.sigma_recall_analysis(
        fake, real, sigmas, args.top_fraction, args.k, _config(args)
    )
    out.table(["sigma", "recall"], [(float(s), r) for s, r in zip(sigmas, recalls)], "recall")


def cmd_synth(args, out):
    if args.spec is None or args.n is None or args.out in (None, "-"):
        raise ValidationError("synth needs --spec, --n and --out")
    model = synthetic.MixtureModel.load(args.spec)
    codes = synthetic.sample(model, args.n, args.seed)
    fmt = EmbeddingFormat(kind=args.format, width=args.width)
    directory = os.path.dirname(os.path.abspath(args.out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".latent-scope-", suffix=".tmp")
    os.close(fd)
    try:
        save_embeddings(codes, tmp, fmt)
        os.replace(tmp, args.out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


COMMANDS = {
    "score": (cmd_score, "latent density score of every query code"),
    "metrics": (cmd_metrics, "precision, recall, density and coverage of fake vs real"),
    "rank": (cmd_rank, "top / middle / bottom selection by score"),
    "curve": (cmd_curve, "precision, recall and mean realism of the top-k samples by density"),
    "truncation-sweep": (cmd_truncation_sweep, "mean density of codes truncated toward the training mean"),
    "edit": (cmd_edit, "density of codes moved along a latent direction"),
    "sigma-sweep": (cmd_sigma_sweep, "density scores under several bandwidths"),
    "sigma-recall": (cmd_sigma_recall, "recall of the densest fake subset under several bandwidths"),
    "synth": (cmd_synth, "sample a Gaussian-mixture latent set to an embedding file"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--train", help="training latent codes")
    g.add_argument("--query", help="query latent codes")
    g.add_argument("--fake", help="generated latent codes")
    g.add_argument("--real", help="real latent codes")
    g.add_argument("--scores", help="score file (1 column, or index,score) for rank")
    g.add_argument("--direction", help="edit direction, a single row")
    g.add_argument("--spec", help="mixture spec JSON for synth")
    g.add_argument("--format", choices=["npy", "raw", "csv"], default="npy")
    g.add_argument("--dims", type=int, help="row length of raw files")
    g.add_argument("--width", type=int, choices=[32, 64], default=64, help="element bits for raw input and synth output")

    p = common.add_argument_group("parameters")
    p.add_argument("--sigma", type=float, default=density.DEFAULT_SIGMA)
    p.add_argument("--k", type=int, default=manifold.DEFAULT_K, help="k for realism/rarity/precision/recall")
    p.add_argument("--k-density", type=int, default=manifold.DEFAULT_K_DENSITY, help="k for density/coverage")
    p.add_argument("--chunk-rows", type=int, default=density.DEFAULT_CHUNK_ROWS)
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${density.THREADS_ENV} or 1)")
    p.add_argument("--top", type=int)
    p.add_argument("--middle", type=int)
    p.add_argument("--bottom", type=int)
    p.add_argument("--ks", type=_int_list)
    p.add_argument("--psis", type=_float_list)
    p.add_argument("--sigmas", type=_float_list)
    p.add_argument("--alphas", type=_float_list)
    p.add_argument("--top-fraction", type=float, default=0.2)
    p.add_argument("--n", type=int, help="number of rows for synth")
    p.add_argument("--seed", type=int, help="synth seed (default: the mixture file's seed)")
    p.add_argument("--progress", action="store_true", help="print a progress counter on stderr")

    o = common.add_argument_group("output")
    o.add_argument("--out", default="-", help="output path (default stdout)")
    o.add_argument("--out-format", choices=["csv", "json"], default="csv")

    parser = argparse.ArgumentParser(prog="latent-scope", description="Latent-space sample quality scoring.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = density.default_threads()
        out = _Output(args.out, args.out_format)
        COMMANDS[args.command][0](args, out)
        if args.command != "synth":
            out.commit()
    except (ValidationError, ConfigurationError) as exc:
        print(f"latent-scope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericDomainError as exc:
        print(f"latent-scope: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"latent-scope: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LatentScopeError as exc:
        print(f"latent-scope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
