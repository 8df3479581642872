"""Command-line entry point: ``fragilemark <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .engines import EmbedKey, EngineId, embed, reveal
from .errors import FragilemarkError
from .imaging import ImageFormat, load_image, save_image
from .manipulations import ManipulationClass, apply, parse_spec_id
from .metrics import DEFAULT_PSNR_THRESHOLD, DEFAULT_SSIM_THRESHOLD, format_psnr, verify
from .morphing import MorphAux, landmark_path_for, read_landmarks

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2


def _key(text: str) -> int:
    return EmbedKey(int(text, 0)).seed


def _save(img, path: str) -> None:
    # lossless by default; an explicit .jpg/.webp output would damage the payload
    p = Path(path)
    fmt = ImageFormat.png() if p.suffix.lower() in ("", ".png") else ImageFormat.from_suffix(p, 95)
    save_image(img, p, fmt)


def cmd_certify(a: argparse.Namespace) -> int:
    stego = embed(a.engine, _key(a.key), load_image(a.cover), load_image(a.marker))
    _save(stego, a.out)
    return EXIT_OK


def cmd_manipulate(a: argparse.Namespace) -> int:
    spec = parse_spec_id(a.spec, a.seed)
    img = load_image(getattr(a, "in"))
    aux = None
    if spec.cls is ManipulationClass.MORPH:
        if not a.partner:
            print("morph needs --partner", file=sys.stderr)
            return EXIT_ERROR
        la = read_landmarks(a.landmarks_a or landmark_path_for(getattr(a, "in")))
        lb = read_landmarks(a.landmarks_b or landmark_path_for(a.partner))
        aux = MorphAux(load_image(a.partner), la, lb)
    _save(apply(spec, img, aux), a.out)
    return EXIT_OK


def cmd_reveal(a: argparse.Namespace) -> int:
    _save(reveal(a.engine, _key(a.key), load_image(getattr(a, "in"))), a.out)
    return EXIT_OK


def cmd_verify(a: argparse.Namespace) -> int:
    q = verify(load_image(a.marker), load_image(a.revealed), a.ssim_thresh, a.psnr_thresh)
    if a.json:
        print(json.dumps(q.to_dict()))
    else:
        print(f"ssim={q.ssim:.4f} psnr={format_psnr(q.psnr)} mse={q.mse:.4f} "
              f"verdict={'FLAGGED' if q.flagged else 'intact'}")
    return EXIT_FLAGGED if q.flagged else EXIT_OK


def cmd_run_experiment(a: argparse.Namespace) -> int:
    from .experiment.config import load_config
    from .experiment.runner import run_experiment

    summary = run_experiment(load_config(a.config), a.out)
    for name, s in summary["scenarios"].items():
        print(f"{name}: accuracy={s['accuracy']:.4f} macro_f1={s['f1']:.4f}")
    print(f"split_hash={summary['split_hash']}")
    return EXIT_OK


def cmd_gen_corpus(a: argparse.Namespace) -> int:
    from .experiment.corpus import MANIFEST_NAME, gen_corpus

    corpus = gen_corpus(a.n, a.out, a.seed, a.size)
    print(f"wrote {len(corpus)} identities to {Path(a.out) / MANIFEST_NAME}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fragilemark", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    engines = [e.value for e in EngineId]

    s = sub.add_parser("certify", help="embed a marker into a cover")
    s.add_argument("--engine", choices=engines, required=True)
    s.add_argument("--key", required=True, help="unsigned 64-bit integer (decimal or 0x...)")
    s.add_argument("--cover", required=True)
    s.add_argument("--marker", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("manipulate", help="apply one manipulation, e.g. compression/jpeg/q80")
    s.add_argument("--spec", required=True)
    s.add_argument("--in", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--partner")
    s.add_argument("--landmarks-a")
    s.add_argument("--landmarks-b")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_manipulate)

    s = sub.add_parser("reveal", help="extract the marker from an image")
    s.add_argument("--engine", choices=engines, required=True)
    s.add_argument("--key", required=True)
    s.add_argument("--in", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reveal)

    s = sub.add_parser("verify", help="compare a revealed marker to the reference; exit 2 if flagged")
    s.add_argument("--marker", required=True)
    s.add_argument("--revealed", required=True)
    s.add_argument("--ssim-thresh", type=float, default=DEFAULT_SSIM_THRESHOLD)
    s.add_argument("--psnr-thresh", type=float, default=DEFAULT_PSNR_THRESHOLD)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("run-experiment", help="run the configured evaluation and write reports")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_run_experiment)

    s = sub.add_parser("gen-corpus", help="write a synthetic face corpus with landmarks")
    s.add_argument("--n", type=int, default=50)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=2024)
    s.add_argument("--size", type=int, default=224)
    s.set_defaults(func=cmd_gen_corpus)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FragilemarkError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
