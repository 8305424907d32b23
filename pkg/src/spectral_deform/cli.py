"""Command-line pipeline: generate | decompose | encode | descriptor |
reconstruct | filter | cluster.

Stages communicate exclusively through files (bundle directory, SPBS basis,
coefficient CSVs, descriptor JSON, ranking/assignment CSVs), so each stage
is independently runnable and outputs are bitwise-stable given the same
inputs and seeds.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 empty result.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

import numpy as np

from .bundle import (
    BeamParams,
    bundle_from_manifest,
    generate_bundle,
    load_bundle,
    save_bundle,
)
from .descriptor import (
    DeformationDescriptor,
    EmptySelectionError,
    complete_descriptor,
    reconstruction_error,
    select_by_baseline_difference,
    select_by_threshold,
    statistical_threshold,
    tune_threshold,
)
from .laplacian import cotangent_laplacian, operator_fingerprint, uniform_laplacian
from .mesh import MeshError, TriangleMesh, load_mesh, save_mesh
from .retrieval import (
    cluster_coefficients,
    filter_bundle,
    rank_bundle,
    write_assignment_csv,
    write_ranking_csv,
    write_scatter_data,
)
from .spectral import (
    EigensolverError,
    FingerprintMismatchError,
    SpectralBasis,
    SpectralCoefficients,
    eigendecompose,
    encode_geometry,
    reconstruct_geometry,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_EMPTY = 4


def _load_coeff_dir(directory: str) -> tuple[list[str], list[SpectralCoefficients]]:
    paths = sorted(glob.glob(os.path.join(directory, "*.csv")))
    paths = [p for p in paths if not os.path.basename(p).startswith("base")]
    if not paths:
        raise FileNotFoundError(f"no coefficient CSVs in {directory}")
    ids = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    return ids, [SpectralCoefficients.load_csv(p) for p in paths]


def cmd_generate(args) -> int:
    params = BeamParams(
        length=args.length,
        hat_width=args.hat_width,
        hat_height=args.hat_height,
        flange_width=args.flange_width,
        axial_segments=args.axial_segments,
        section_segments=args.section_segments,
    )
    bundle = generate_bundle(
        params, tuple(args.per_mode), seed=args.seed, noise_sigma=args.noise_sigma
    )
    save_bundle(args.out, bundle)
    if args.verbose:
        print(
            f"wrote bundle: N={bundle.base.n_vertices}, "
            f"{len(bundle.states)} states -> {args.out}"
        )
    return EXIT_OK


def cmd_decompose(args) -> int:
    base = load_mesh(os.path.join(args.bundle, "base.off"))
    if args.modes > base.n_vertices:
        print(
            f"error: --modes {args.modes} exceeds vertex count {base.n_vertices}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    m = args.modes if args.modes > 0 else min(500, base.n_vertices - 1)
    if args.operator == "uniform":
        L = uniform_laplacian(base)
    else:
        L = cotangent_laplacian(base)
    basis = eigendecompose(L, m, operator_fingerprint=operator_fingerprint(L))
    basis.save(args.out)
    if args.verbose:
        print(f"wrote basis: N={basis.n}, M={basis.m} -> {args.out}")
    return EXIT_OK


def cmd_encode(args) -> int:
    basis = SpectralBasis.load(args.basis)
    bundle = load_bundle(args.bundle)
    os.makedirs(args.out, exist_ok=True)
    encode_geometry(basis, bundle.base.vertices).save_csv(
        os.path.join(args.out, "base.csv")
    )
    for i, state in enumerate(bundle.states):
        encode_geometry(basis, state.coordinates).save_csv(
            os.path.join(args.out, f"{i:03d}.csv")
        )
    if args.verbose:
        print(f"wrote {len(bundle.states) + 1} coefficient files -> {args.out}")
    return EXIT_OK


def cmd_descriptor(args) -> int:
    coeffs = SpectralCoefficients.load_csv(args.coeffs)
    if args.tune is not None:
        basis = SpectralBasis.load(args.basis)
        t, desc, achieved = tune_threshold(
            coeffs, basis, args.tune, augment=args.augment, label=args.label
        )
        if args.verbose:
            print(f"tuned t={t:g}, achieved RMS {achieved:g}")
    else:
        if args.baseline is not None:
            base = SpectralCoefficients.load_csv(args.baseline)
            delta = SpectralCoefficients(
                coeffs.values - base.values, coeffs.basis_fingerprint
            )
            t = args.threshold if args.threshold is not None else statistical_threshold(delta)
            idx = select_by_baseline_difference(coeffs, base, t)
            mode = "baseline_difference"
        else:
            t = args.threshold if args.threshold is not None else statistical_threshold(coeffs)
            idx = select_by_threshold(coeffs, t)
            mode = "magnitude"
        desc = complete_descriptor(
            idx,
            coeffs,
            augment=args.augment,
            threshold=t,
            selection_mode=mode,
            label=args.label,
        )
    desc.save(args.out)
    if args.verbose:
        print(f"wrote descriptor: t={desc.threshold:g}, size_M={desc.size_m} -> {args.out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    basis = SpectralBasis.load(args.basis)
    coeffs = SpectralCoefficients.load_csv(args.coeffs)
    base = load_mesh(args.mesh)
    desc = DeformationDescriptor.load(args.descriptor)
    reference = reconstruct_geometry(basis, coeffs, None)

    subset_desc = desc.indices
    m = desc.size_m
    subset_ordered = np.arange(m)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for name, subset in (
        ("descriptor", subset_desc),
        ("first_m_ordered", subset_ordered),
    ):
        coords = reconstruct_geometry(basis, coeffs, subset)
        save_mesh(
            os.path.join(args.out, f"recon_{name}.off"),
            TriangleMesh(coords, base.triangles),
        )
        rows.append((name, reconstruction_error(basis, coeffs, subset, reference)))
    with open(os.path.join(args.out, "errors.csv"), "w") as f:
        f.write("reconstruction,rms_error\n")
        for name, err in rows:
            f.write(f"{name},{float(err)!r}\n")
    if args.verbose:
        for name, err in rows:
            print(f"{name}: RMS {err:g}")
    return EXIT_OK


def cmd_filter(args) -> int:
    desc = DeformationDescriptor.load(args.descriptor)
    ids, coeffs = _load_coeff_dir(args.coeffs_dir)
    ranking = rank_bundle(desc, coeffs, ids)
    if args.top_k is not None:
        keep = set(
            filter_bundle(desc, coeffs, ids, top_k=args.top_k)
        )
    elif args.min_score is not None:
        keep = set(filter_bundle(desc, coeffs, ids, min_score=args.min_score))
    else:
        keep = set(ids)
    kept = type(ranking)(
        ids=tuple(i for i in ranking.ids if i in keep),
        scores=np.array([s for i, s in ranking if i in keep]),
        label=ranking.label,
    )
    write_ranking_csv(args.out, kept)
    if args.verbose:
        print(f"wrote {len(kept.ids)} ranked shapes -> {args.out}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    ids, coeffs = _load_coeff_dir(args.coeffs_dir)
    if args.k < 2:
        print(f"error: need k >= 2, got {args.k}", file=sys.stderr)
        return EXIT_USAGE
    assignment = cluster_coefficients(
        coeffs, args.k, feature=args.feature, m=args.first_m, seed=args.seed
    )
    write_assignment_csv(args.out, ids, assignment)
    if args.scatter:
        write_scatter_data(args.scatter, coeffs)
    if args.verbose:
        print(f"k={args.k} inertia {assignment.inertia:g} -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spectral-deform",
        description="Spectral deformation descriptors for simulation bundles",
    )
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic beam bundle")
    g.add_argument("--out", required=True)
    g.add_argument("--per-mode", nargs=3, type=int, default=[34, 33, 33],
                   metavar=("UP", "DOWN", "CRUSH"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-sigma", type=float, default=None)
    g.add_argument("--length", type=float, default=400.0)
    g.add_argument("--hat-width", type=float, default=60.0)
    g.add_argument("--hat-height", type=float, default=40.0)
    g.add_argument("--flange-width", type=float, default=15.0)
    g.add_argument("--axial-segments", type=int, default=60)
    g.add_argument("--section-segments", type=int, default=12)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("decompose", help="eigendecompose the base mesh operator")
    d.add_argument("--bundle", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--modes", type=int, default=0,
                   help="number of eigenpairs (default min(500, N-1))")
    d.add_argument("--operator", choices=["cotangent", "uniform"],
                   default="cotangent")
    d.set_defaults(func=cmd_decompose)

    e = sub.add_parser("encode", help="project all bundle states into the basis")
    e.add_argument("--bundle", required=True)
    e.add_argument("--basis", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_encode)

    s = sub.add_parser("descriptor", help="build a deformation descriptor")
    s.add_argument("--coeffs", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--label", default="")
    s.add_argument("--augment", action="store_true",
                   help="always include eigenvector indices 0 and 1")
    s.add_argument("--baseline", default=None,
                   help="baseline coefficient CSV for difference selection")
    group = s.add_mutually_exclusive_group()
    group.add_argument("--threshold", type=float, default=None)
    group.add_argument("--tune", type=float, default=None,
                       help="target reconstruction RMS for threshold tuning")
    s.add_argument("--basis", default=None, help="required with --tune")
    s.set_defaults(func=cmd_descriptor)

    r = sub.add_parser("reconstruct",
                       help="descriptor vs. eigenvalue-ordered reconstruction")
    r.add_argument("--basis", required=True)
    r.add_argument("--coeffs", required=True)
    r.add_argument("--descriptor", required=True)
    r.add_argument("--mesh", required=True, help="base mesh for connectivity")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    f = sub.add_parser("filter", help="rank and filter a bundle by similarity")
    f.add_argument("--descriptor", required=True)
    f.add_argument("--coeffs-dir", required=True)
    f.add_argument("--out", required=True)
    group = f.add_mutually_exclusive_group()
    group.add_argument("--top-k", type=int, default=None)
    group.add_argument("--min-score", type=float, default=None)
    f.set_defaults(func=cmd_filter)

    c = sub.add_parser("cluster", help="cluster shapes in coefficient space")
    c.add_argument("--coeffs-dir", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("-k", type=int, required=True)
    c.add_argument("--feature", choices=["first_eigenvector_xyz", "first_m"],
                   default="first_eigenvector_xyz")
    c.add_argument("--first-m", type=int, default=None)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--scatter", default=None,
                   help="optional gnuplot scatter data output")
    c.set_defaults(func=cmd_cluster)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "descriptor" and args.tune is not None and args.basis is None:
        parser.error("--tune requires --basis")
    try:
        return args.func(args)
    except EmptySelectionError as e:
        print(f"empty result: {e}", file=sys.stderr)
        return EXIT_EMPTY
    except EigensolverError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MeshError, FingerprintMismatchError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
