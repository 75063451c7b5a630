"""Command-line entry point: ``patchsep {mix,train,separate,inspect,eval}``.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""
import argparse
import contextlib
import os
import sys
from pathlib import Path


from . import __version__
from .audio_io import read_wav, write_wav
from .autoenc import (
    DEFAULT_HIDDEN,
    encode,
    export_weight_windows,
    init_model,
    load_model,
    save_model,
    train,
)
from .errors import PatchSepError
from .evalkit import best_permutation_score, format_report, make_mixture
from .export import (
    export_pgm,
    sha256_of,
    write_clustering_csv,
    write_matrix_csv,
    write_weight_windows_csv,
)
from .patching import to_features
from .separation import SeparationConfig, analyze, separate

DEFAULT_SEED = 1234


class UsageError(Exception):
    pass


def _csv_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_ints(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"hidden sizes must be positive, got {text!r}")
    return tuple(vals)


def _default_seed():
    env = os.environ.get("PATCHSEP_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"PATCHSEP_SEED must be an integer, got {env!r}") from None


def _add_analysis_flags(p):
    p.add_argument("--frame-ms", type=float, default=40.0, help="analysis frame length (ms)")
    p.add_argument("--hop-ms", type=float, default=10.0, help="frame shift (ms)")
    p.add_argument("--patch-h", type=int, default=30, help="patch height in frequency channels")
    p.add_argument("--patch-l", type=int, default=5, help="patch length in frames")
    p.add_argument("--stride-f", type=int, default=1, help="patch stride along frequency")
    p.add_argument("--stride-t", type=int, default=1, help="patch stride along time")


def _add_train_flags(p):
    p.add_argument("--hidden", type=_csv_ints, default=DEFAULT_HIDDEN,
                   help='hidden layer sizes, e.g. "50,18,6,18,50"')
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd_momentum"), default="adam")
    p.add_argument("--seed", type=int, default=None, help="default: $PATCHSEP_SEED or 1234")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS threads; 1 guarantees bit-exact reruns")


def build_parser():
    parser = argparse.ArgumentParser(prog="patchsep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="mix WAV files at given gains")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--gains", type=_csv_floats, default=None, help='dB gains, e.g. "0,-3"')
    p.add_argument("--out", type=Path, required=True, help="mixture WAV path")

    p = sub.add_parser("train", help="train an autoencoder on a mixture's patches")
    p.add_argument("input", type=Path)
    p.add_argument("--model-out", type=Path, required=True)
    _add_analysis_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("separate", help="separate a mixture into one WAV per cluster")
    p.add_argument("input", type=Path)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path, help="pre-trained model file")
    src.add_argument("--train-inline", action="store_true", help="train on the input first")
    p.add_argument("--out", type=Path, required=True, help="output stem")
    p.add_argument("--k", type=int, default=4, help="number of clusters")
    p.add_argument("--mask-mode", choices=("ratio", "binary"), default="ratio")
    p.add_argument("--export-dir", type=Path, default=None)
    _add_analysis_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("inspect", help="export last-layer weight windows")
    p.add_argument("model", type=Path)
    p.add_argument("--patch-h", type=int, default=30)
    p.add_argument("--patch-l", type=int, default=5)
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("eval", help="best-permutation SNR of estimates against references")
    p.add_argument("--ref", type=Path, nargs="+", required=True)
    p.add_argument("--est", type=Path, nargs="+", required=True)
    return parser


def _config(args, k=4, mask_mode="ratio"):
    # Grid flags are checked here because the grid itself is only built after the WAV is read.
    for flag, value in (("--patch-h", args.patch_h), ("--patch-l", args.patch_l),
                        ("--stride-f", args.stride_f), ("--stride-t", args.stride_t)):
        if value < 1:
            raise UsageError(f"{flag} must be >= 1, got {value}")
    if args.stride_f > args.patch_h or args.stride_t > args.patch_l:
        raise UsageError("strides may not exceed the patch size")
    try:
        return SeparationConfig(
            frame_ms=args.frame_ms, hop_ms=args.hop_ms, h=args.patch_h, l=args.patch_l,
            stride_freq=args.stride_f, stride_time=args.stride_t, hidden=tuple(args.hidden),
            k=k, epochs=args.epochs, batch_size=args.batch, learning_rate=args.lr,
            optimizer=args.optimizer, seed=args.seed, mask_mode=mask_mode)
    except ValueError as exc:
        if isinstance(exc, PatchSepError):
            raise
        raise UsageError(str(exc)) from None


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    if n < 1:
        raise UsageError("--threads must be >= 1")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def cmd_mix(args):
    if len(args.inputs) < 2:
        raise UsageError("mix needs at least two input files")
    gains = args.gains if args.gains is not None else [0.0] * len(args.inputs)
    if len(gains) != len(args.inputs):
        raise UsageError(f"{len(args.inputs)} inputs but {len(gains)} gains")
    case = make_mixture([read_wav(p) for p in args.inputs], gains)
    write_wav(args.out, case.mixture)
    stem = args.out.with_suffix("")
    for n, ref in enumerate(case.references):
        write_wav(f"{stem}.ref{n}.wav", ref)
    return 0


def cmd_train(args):
    cfg = _config(args)
    mix = read_wav(args.input)
    with _threads(args.threads):
        _, patches = analyze(mix, cfg)
        model = init_model(cfg.layer_sizes(), cfg.seed)
        model, _ = train(model, patches, cfg.train_config(),
                         on_epoch=lambda e, loss: print(f"epoch {e} loss {loss:.10g}", flush=True))
    save_model(model, args.model_out)
    return 0


def _manifest(path, entries):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in entries:
            fh.write(f"{key}={value}\n")


def cmd_separate(args):
    cfg = _config(args, k=args.k, mask_mode=args.mask_mode)
    mix = read_wav(args.input)
    model = load_model(args.model) if args.model else None
    stem = str(args.out)
    on_epoch = (lambda e, loss: print(f"epoch {e} loss {loss:.10g}", flush=True)) if model is None else None
    with _threads(args.threads):
        result = separate(mix, cfg, model=model, on_epoch=on_epoch)

    outputs = []
    if args.model is None:
        model_path = f"{stem}.model.txt"
        save_model(result.model, model_path)
        outputs.append(model_path)
    for q, src in enumerate(result.sources):
        path = f"{stem}.cluster{q}.wav"
        write_wav(path, src)
        outputs.append(path)
    if args.export_dir is not None:
        outputs.extend(_export_run(result, args.export_dir))

    entries = [("command", "separate"), ("version", __version__),
               ("input", args.input), ("input_sha256", sha256_of(args.input)),
               ("sample_rate_hz", mix.sample_rate_hz)]
    entries += [(f"config.{key}", ",".join(map(str, val)) if isinstance(val, tuple) else val)
                for key, val in vars(cfg).items()]
    entries += [("seed.model_init", cfg.seed), ("seed.train_shuffle", cfg.train_config().seed),
                ("seed.kmeans", cfg.kmeans_config().seed),
                ("threads", args.threads if args.threads is not None else "default")]
    if args.model is not None:
        entries += [("model", args.model), ("model_sha256", sha256_of(args.model))]
    else:
        entries.append(("train.final_loss", repr(result.train_log.losses[-1])))
    C, M = result.spectrogram.shape
    entries += [("spectrogram.channels", C), ("spectrogram.frames", M),
                ("patches.count", len(result.patches)), ("patches.dim", result.patches.spec.dim),
                ("kmeans.inertia", repr(result.clustering.inertia))]
    entries += [(f"cluster{q}.energy", repr(e)) for q, e in enumerate(result.cluster_energies)]
    entries += [(f"output.{Path(p).name}.sha256", sha256_of(p)) for p in outputs]
    _manifest(f"{stem}.manifest.txt", entries)
    return 0


def _export_run(result, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    mag = result.spectrogram.magnitude
    feats, _ = to_features(mag)
    write_matrix_csv(mag, out_dir / "spectrogram.csv")
    write_matrix_csv(feats, out_dir / "features.csv")
    # Log-compressed features are the readable view of the spectrogram.
    export_pgm(feats, out_dir / "spectrogram.pgm", "absolute")
    written += [out_dir / "spectrogram.csv", out_dir / "features.csv", out_dir / "spectrogram.pgm"]
    for q, mask in enumerate(result.masks.masks):
        write_matrix_csv(mask, out_dir / f"mask{q}.csv")
        export_pgm(mask, out_dir / f"mask{q}.pgm", "absolute")
        written += [out_dir / f"mask{q}.csv", out_dir / f"mask{q}.pgm"]
    codes = encode(result.model, result.patches.vectors)
    write_clustering_csv(result.patches.origins, result.clustering.labels, codes,
                         out_dir / "clustering.csv")
    written.append(out_dir / "clustering.csv")
    return [str(p) for p in written]


def cmd_inspect(args):
    model = load_model(args.model)
    windows = export_weight_windows(model, args.patch_h, args.patch_l)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for u, w in enumerate(windows):
        export_pgm(w, args.out_dir / f"weight_window_{u:02d}.pgm", "minmax")
    write_weight_windows_csv(windows, args.out_dir / "weight_windows.csv")
    return 0


def cmd_eval(args):
    refs = [read_wav(p) for p in args.ref]
    ests = [read_wav(p) for p in args.est]
    snrs, groups = best_permutation_score(refs, ests)
    sys.stdout.write(format_report(snrs, groups))
    return 0


COMMANDS = {"mix": cmd_mix, "train": cmd_train, "separate": cmd_separate,
            "inspect": cmd_inspect, "eval": cmd_eval}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"patchsep {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (PatchSepError, OSError, ValueError) as exc:
        print(f"patchsep {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
