"""Command line driver: ``dmdseg synth | segment | quantify | eval``.

Every command writes into its own output directory and records its full
configuration there as ``run_config.txt``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path


from . import __version__, dmd, synthetic
from .errors import DmdsegError, FormatError, NumericalError, ValidationError
from .evaluation import evaluate, format_table, write_report_csv
from .imaging import load_sequence, read_mask, to_uint8, write_mask, write_pgm
from .ordering import mode_to_image, select_mode
from .pipeline import run as run_pipeline
from .pipeline import stage
from .quantification import apply_template, write_curve_csv
from .segmentation import parse_threshold

logger = logging.getLogger("dmdseg")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3
RUN_CONFIG_NAME = "run_config.txt"
_SEGMENT_ONLY = {"mode", "svd_cutoff", "rank", "connectivity", "top_k_components", "threshold"}


@dataclass
class RunConfig:
    command: str
    output: str
    input: str | None = None
    delta_t: float | None = None
    mode: int = 2
    svd_cutoff: float = dmd.DEFAULT_REL_CUTOFF
    rank: str = "full"
    connectivity: int = 8
    top_k_components: int = 1
    threshold: str = "otsu"
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.delta_t is not None and not self.delta_t > 0:
            raise ValidationError(f"--delta-t must be positive, got {self.delta_t}")
        if self.mode < 1:
            raise ValidationError(f"--mode must be at least 1, got {self.mode}")
        if not 0 <= self.svd_cutoff < 1:
            raise ValidationError(f"--svd-cutoff must lie in [0, 1), got {self.svd_cutoff}")
        self.rank_value()
        if self.connectivity not in (4, 8):
            raise ValidationError(f"--connectivity must be 4 or 8, got {self.connectivity}")
        if self.top_k_components < 1:
            raise ValidationError(f"--top-k-components must be at least 1, got {self.top_k_components}")
        parse_threshold(self.threshold)

    def rank_value(self) -> int | str | None:
        if self.rank == "full":
            return None
        if self.rank == "auto":
            return "auto"
        try:
            r = int(self.rank)
        except ValueError:
            r = 0
        if r < 1:
            raise ValidationError(f"--rank must be 'full', 'auto' or a positive integer, got {self.rank!r}")
        return r

    def to_text(self) -> str:
        lines = [f"# dmdseg {__version__} run configuration"]
        for f in fields(self):
            if f.name == "extra" or (f.name in _SEGMENT_ONLY and self.command != "segment"):
                continue
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        for key in sorted(self.extra):
            lines.append(f"{key} = {self.extra[key]!r}")
        return "\n".join(lines) + "\n"

    def write(self, directory: Path) -> None:
        (directory / RUN_CONFIG_NAME).write_text(self.to_text(), encoding="utf-8")


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors, not argparse's default exit status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WIDTHxHEIGHT, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    def logging_flags(p, default):
        p.add_argument("-v", "--verbose", action="count", default=default(0), help="more logging (repeatable)")
        p.add_argument("-q", "--quiet", action="store_true", default=default(False), help="only log errors")

    parser = _Parser(prog="dmdseg", description=__doc__.splitlines()[0])
    logging_flags(parser, lambda v: v)
    # subcommands accept the same flags without clobbering values given before the subcommand
    common = argparse.ArgumentParser(add_help=False)
    logging_flags(common, lambda v: argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"dmdseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate the synthetic kidney/liver phantom")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.05, help="background noise standard deviation")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--size", type=_size, default=(64, 64), metavar="WxH")
    p.add_argument("--delta-t", type=float, default=1.0, help="seconds between frames")
    p.add_argument("--simple", action="store_true", help="single kidney ellipse instead of two")
    p.add_argument("--poisson-rate", type=float, default=15.0)
    p.add_argument("--poisson-weight", type=float, default=0.7)
    p.add_argument("--log-weight", type=float, default=0.3)
    p.add_argument("--sigmoid-center", type=float, default=None, help="default: frames / 2")
    p.add_argument("--sigmoid-scale", type=float, default=None, help="default: frames / 12")
    p.add_argument("--liver-weight", type=float, default=0.3)

    def pipeline_flags(p):
        p.add_argument("--input", required=True, help="frame directory or sequence.toml manifest")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--delta-t", type=float, default=None, help="seconds between frames (overrides manifest)")

    p = sub.add_parser("segment", parents=[common], help="DMD functional segmentation of a sequence")
    pipeline_flags(p)
    p.add_argument("--mode", type=int, default=2, help="1-based index of the ordered mode to segment")
    p.add_argument("--svd-cutoff", type=float, default=dmd.DEFAULT_REL_CUTOFF,
                   help="drop singular values below this fraction of the largest")
    p.add_argument("--rank", default="full", help="'full', 'auto' (optimal hard threshold) or an integer cap")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--top-k-components", type=int, default=1)
    p.add_argument("--threshold", default="otsu", help="'otsu' or 'fixed:<value in [0,1]>'")
    p.add_argument("--dump-modes", type=int, nargs="*", default=[], metavar="K",
                   help="also write these ordered modes as normalized PGM images")

    p = sub.add_parser("quantify", parents=[common], help="time-intensity curve inside a mask")
    pipeline_flags(p)
    p.add_argument("--mask", required=True, help="PGM mask, nonzero = inside")

    p = sub.add_parser("eval", parents=[common], help="Jaccard / MSE report against expert masks")
    p.add_argument("--dmd", required=True, help="automatic segmentation mask (PGM)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--experts", nargs=3, metavar="MASK", help="three expert masks")
    group.add_argument("--ground-truth", metavar="MASK", help="single reference mask (synthetic data)")
    p.add_argument("--sequence", default=None, help="image sequence for curve MSE")
    p.add_argument("--delta-t", type=float, default=None)
    p.add_argument("--label", default="dataset", help="row label in the report")
    p.add_argument("--out", default=None, help="output directory for report.csv")
    return parser


def _prepare_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    width, height = args.size
    spec = synthetic.PhantomSpec(
        width=width, height=height, frames=args.frames, seed=args.seed, noise_sigma=args.noise,
        delta_t=args.delta_t, poisson_rate=args.poisson_rate, poisson_weight=args.poisson_weight,
        log_weight=args.log_weight, sigmoid_center=args.sigmoid_center, sigmoid_scale=args.sigmoid_scale,
        liver_weight=args.liver_weight, simple=args.simple,
    )
    config = RunConfig("synth", args.out, delta_t=args.delta_t, seed=args.seed, extra={
        "noise": args.noise, "frames": args.frames, "size": f"{width}x{height}", "simple": args.simple,
        "poisson_rate": args.poisson_rate, "poisson_weight": args.poisson_weight,
        "log_weight": args.log_weight, "sigmoid_center": spec.sigmoid_center,
        "sigmoid_scale": spec.sigmoid_scale, "liver_weight": args.liver_weight,
        "rng_algorithm": synthetic.RNG_ALGORITHM,
    })
    config.validate()
    with stage("phantom"):
        phantom = synthetic.generate(spec)
    out = _prepare_out(args.out)
    synthetic.write_phantom(phantom, out)
    config.write(out)
    logger.info("wrote %d-frame %dx%d phantom to %s", spec.frames, width, height, out)
    return EXIT_OK


def cmd_segment(args) -> int:
    config = RunConfig("segment", args.out, input=args.input, delta_t=args.delta_t, mode=args.mode,
                       svd_cutoff=args.svd_cutoff, rank=str(args.rank), connectivity=args.connectivity,
                       top_k_components=args.top_k_components, threshold=args.threshold,
                       extra={"dump_modes": list(args.dump_modes)})
    config.validate()
    with stage("load"):
        seq = load_sequence(args.input, args.delta_t)
    if len(seq) < 4:
        raise ValidationError(f"need at least 4 frames for mode extraction, got {len(seq)}")
    result = run_pipeline(seq, mode=args.mode, rel_cutoff=args.svd_cutoff, rank=config.rank_value(),
                          connectivity=args.connectivity, top_k=args.top_k_components,
                          threshold=args.threshold)
    out = _prepare_out(args.out)
    write_pgm(out / f"mode_{args.mode:02d}.pgm", to_uint8(result.mode_image))
    write_mask(out / "binary.pgm", result.segmentation.binary)
    write_mask(out / "template.pgm", result.template)
    write_curve_csv(result.curve, out / "curve.csv")
    dmd.write_spectrum_csv(result.decomposition, out / "spectrum.csv")
    for k in args.dump_modes:
        with stage("mode ordering"):
            img = mode_to_image(select_mode(result.ordered, k), seq.width, seq.height)
        write_pgm(out / f"mode_{k:02d}.pgm", to_uint8(img))
    config.write(out)
    logger.info("rank %d, %d ordered modes; template area %d px (threshold %.4f)",
                result.decomposition.rank, len(result.ordered), int(result.template.sum()),
                result.segmentation.threshold)
    return EXIT_OK


def cmd_quantify(args) -> int:
    config = RunConfig("quantify", args.out, input=args.input, delta_t=args.delta_t,
                       extra={"mask": args.mask})
    config.validate()
    with stage("load"):
        seq = load_sequence(args.input, args.delta_t)
        mask = read_mask(args.mask)
    with stage("quantification"):
        curve = apply_template(seq, mask)
    out = _prepare_out(args.out)
    write_curve_csv(curve, out / "curve.csv")
    config.write(out)
    return EXIT_OK


def cmd_eval(args) -> int:
    experts = args.experts or [args.ground_truth] * 3
    config = RunConfig("eval", args.out or "", input=args.sequence, delta_t=args.delta_t,
                       extra={"dmd": args.dmd, "experts": list(experts), "label": args.label})
    config.validate()
    with stage("load"):
        d = read_mask(args.dmd)
        masks = [read_mask(p) for p in experts]
        seq = load_sequence(args.sequence, args.delta_t) if args.sequence else None
    with stage("evaluation"):
        report = evaluate(d, *masks, sequence=seq, label=args.label)
    print(format_table([report]))
    for note in report.notes:
        logger.warning(note)
    if args.out:
        out = _prepare_out(args.out)
        write_report_csv([report], out / "report.csv")
        config.write(out)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "segment": cmd_segment, "quantify": cmd_quantify, "eval": cmd_eval}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_IO
    return EXIT_VALIDATION


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DmdsegError, OSError) as exc:
        where = getattr(exc, "stage", None)
        prefix = f"{where}: " if where else ""
        print(f"dmdseg {args.command}: error: {prefix}{exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
