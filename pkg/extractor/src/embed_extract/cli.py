"""extract images|captions --manifest ... --encoder ... --out ...

Exit codes: 0 success, 1 partial failures (items skipped), 2 bad usage or
encoder load failure.
"""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderLoadError, get_encoder
from .extract import ExtractionJob, ManifestError, extract_captions, extract_images


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command, help_text in (
        ("images", "encode manifest images into an embedding store"),
        ("captions", "encode cached caption pairs into an embedding store"),
    ):
        p = sub.add_parser(command, help=help_text)
        p.add_argument("--manifest", required=True,
                       help="image list for `images`, caption cache JSONL for `captions`")
        p.add_argument("--encoder", required=True, help="toy-<dim> or clip:<checkpoint>")
        p.add_argument("--out", required=True)
        p.add_argument("--batch-size", type=int, default=16)
        p.add_argument("--device", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        encoder = get_encoder(args.encoder, args.device)
    except EncoderLoadError as e:
        print(f"encoder load failed: {e}", file=sys.stderr)
        return 2
    job = ExtractionJob(
        manifest=args.manifest,
        encoder_name=args.encoder,
        out_path=args.out,
        batch_size=max(1, args.batch_size),
        device=args.device,
    )
    try:
        if args.command == "images":
            outcome = extract_images(job, encoder)
        else:
            outcome = extract_captions(job, encoder)
    except ManifestError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"{args.command}: wrote {outcome.written} vectors (dim {encoder.dim}) to {args.out}")
    for item_id, why in outcome.failures:
        print(f"  SKIPPED {item_id}: {why}", file=sys.stderr)
    return 0 if outcome.ok else 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
