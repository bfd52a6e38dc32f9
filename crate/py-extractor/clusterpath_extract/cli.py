import argparse
import sys

from .spec import ExtractionSpec, Perturbation, extract


def parse_perturbation(text):
    if text == "none":
        return Perturbation()
    kind, _, rest = text.partition(":")
    if kind == "gaussian":
        return Perturbation(kind="gaussian", sigma=float(rest))
    if kind == "affine":
        rot, tr, sc = (float(v) for v in rest.split(","))
        return Perturbation(kind="affine", rotation_deg=rot, translate_fraction=tr, scale=sc)
    raise argparse.ArgumentTypeError(f"unknown perturbation {text!r}")


def main(argv=None):
    p = argparse.ArgumentParser(prog="clusterpath-extract")
    sub = p.add_subparsers(dest="command", required=True)
    e = sub.add_parser("extract", help="dump hooked layer activations as a bundle")
    e.add_argument("--model", required=True)
    e.add_argument("--layers", required=True, help="comma-separated module names")
    e.add_argument("--dataset", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--batch-size", type=int, default=64)
    e.add_argument("--device", default="cpu")
    e.add_argument("--perturbation", type=parse_perturbation, default=Perturbation(),
                   help="none | gaussian:SIGMA | affine:DEG,FRAC,SCALE")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--limit", type=int)
    a = p.parse_args(argv)
    spec = ExtractionSpec(
        model=a.model, layers=a.layers.split(","), dataset=a.dataset, out=a.out,
        batch_size=a.batch_size, device=a.device, perturbation=a.perturbation,
        seed=a.seed, limit=a.limit,
    )
    try:
        extract(spec)
    except NotImplementedError as err:
        print(f"clusterpath-extract: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
