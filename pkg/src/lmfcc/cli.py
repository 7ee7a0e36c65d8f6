"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import audio_io, constraints, metrics
from .autodiff import fd_check
from .constraints import Mode
from .errors import DataError, NumericalError
from .kernels import KernelSet, MfccConfig
from .network import ToyEmbedNet
from .pipeline import extract
from .trainer import SynthDataset, TrainConfig, adapt, pretrain, write_trace

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
GRADCHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_config_file(path) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


def _need_file(path):
    if not os.path.isfile(path):
        raise DataError(f"input file not found: {path}")


def _need_outdir(path):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise DataError(f"output directory does not exist: {parent}")


def _load_config(path):
    if path is None:
        return MfccConfig()
    _need_file(path)
    return MfccConfig.from_mapping(read_config_file(path))


def cmd_init_kernels(args):
    _need_outdir(args.out)
    cfg = _load_config(args.config)
    audio_io.write_kernels(KernelSet.initial(cfg), args.out)
    return EXIT_OK


def cmd_extract(args):
    _need_file(args.kernels)
    _need_file(args.wav)
    _need_outdir(args.out)
    ks = audio_io.read_kernels(args.kernels)
    wav = audio_io.read_wav(args.wav)
    fm = extract(wav, ks, apply_sad=not args.no_sad, apply_cmn=not args.no_cmn)
    audio_io.write_features(fm, args.out)
    print(f"{fm.num_frames} frames x {fm.values.shape[1]} coefficients -> {args.out}")
    return EXIT_OK


def cmd_gradcheck(args):
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    ok = True
    for component in constraints.COMPONENTS:
        err = max(fd_check(component, seed) for seed in range(args.seeds))
        passed = err < GRADCHECK_TOL
        ok &= passed
        print(f"{component:8s} max_rel_err={err:.3e} {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_adapt(args):
    _need_outdir(args.out_kernels)
    _need_outdir(args.trace)
    if args.kernels is not None:
        _need_file(args.kernels)
        ks = audio_io.read_kernels(args.kernels)
    else:
        ks = KernelSet.initial(_load_config(args.config))
    cfg = TrainConfig(component=args.component, mode=Mode(args.mode), lam=args.lam,
                      learning_rate=args.lr, steps=args.steps, seed=args.seed,
                      dft_keep_scale=not args.literal_dft_update)
    data = SynthDataset(args.speakers, args.utts, seed=args.seed,
                        sample_rate_hz=ks.config.sample_rate_hz)
    train, val = data.prepare(ks.config, val_per_speaker=args.val_utts)
    net = ToyEmbedNet.create(ks.config.num_ceps, args.speakers, seed=args.seed)
    net = pretrain(train, net, ks, args.pretrain_steps, seed=args.seed,
                   learning_rate=args.lr)
    result = adapt(train, val, net, ks, cfg)
    audio_io.write_kernels(result.kernels, args.out_kernels)
    write_trace(result.trace, args.trace)
    first, last = result.trace[0], result.trace[-1]
    print(f"val_ce {first.val_ce:.6f} -> {last.val_ce:.6f} after {last.step} steps")
    return EXIT_OK


def cmd_reg(args):
    _need_file(args.kernels)
    ks = audio_io.read_kernels(args.kernels)
    print(repr(constraints.regularizer(ks, args.component)))
    return EXIT_OK


def cmd_project(args):
    _need_file(args.kernels)
    _need_outdir(args.out)
    ks = audio_io.read_kernels(args.kernels)
    audio_io.write_kernels(constraints.project(ks, args.component), args.out)
    return EXIT_OK


def cmd_eval(args):
    _need_file(args.scores)
    det_out = args.det_out or args.scores + ".det.csv"
    _need_outdir(det_out)
    ts = metrics.read_scores(args.scores)
    print(f"EER {metrics.eer(ts):.6f}")
    print(f"minDCF {metrics.min_dcf(ts):.6f}")
    metrics.write_det(metrics.det_points(ts), det_out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lmfcc", description="Learnable MFCC front-end tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    components = list(constraints.COMPONENTS)

    p = sub.add_parser("init-kernels", help="write static MFCC kernels")
    p.add_argument("--config", help="key=value MFCC config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_kernels)

    p = sub.add_parser("extract", help="compute features for a WAV file")
    p.add_argument("--kernels", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-sad", action="store_true")
    p.add_argument("--no-cmn", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("gradcheck", help="finite-difference check of all backward passes")
    p.add_argument("--seeds", type=int, default=10)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("adapt", help="adapt one kernel on synthetic speakers")
    p.add_argument("--component", required=True, choices=components + ["none"])
    p.add_argument("--mode", default="none", choices=[m.value for m in Mode])
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out-kernels", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--kernels", help="starting kernels (default: static init)")
    p.add_argument("--config", help="key=value MFCC config file")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--speakers", type=int, default=10)
    p.add_argument("--utts", type=int, default=50, help="utterances per speaker")
    p.add_argument("--val-utts", type=int, default=10, help="held-out utterances per speaker")
    p.add_argument("--pretrain-steps", type=int, default=100)
    p.add_argument("--literal-dft-update", action="store_true",
                   help="kernel mode: use F @ F.T without rescaling (overflows within ~10 steps)")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("reg", help="print a component's loss regulariser")
    p.add_argument("--kernels", required=True)
    p.add_argument("--component", required=True, choices=components)
    p.set_defaults(func=cmd_reg)

    p = sub.add_parser("project", help="apply a component's kernel projection")
    p.add_argument("--kernels", required=True)
    p.add_argument("--component", required=True, choices=components)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("eval", help="EER, minDCF and DET points from a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--det-out", help="DET CSV path (default: <scores>.det.csv)")
    p.set_defaults(func=cmd_eval)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "adapt" and not (args.steps >= 0 and args.speakers >= 2
                                            and args.utts > args.val_utts >= 1):
            raise UsageError("adapt: need steps >= 0, speakers >= 2, utts > val-utts >= 1")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
