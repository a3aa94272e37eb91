"""Embeddable eigenvalue region against spectra of random stochastic matrices.

For each dimension, counts how many sampled eigenvalues fall outside the
region (these matrices cannot come from any memoryless evolution) and
writes curve and sample points to CSV.
"""

import argparse
import csv
import os

import numpy as np

from covcoh.witness import embeddability_curve, embeddability_region, karpelevic_sample


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="out")
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    for d in (3, 4, 5):
        phi, r = embeddability_curve(d, 721)
        lam = karpelevic_sample(d, args.samples, seed=args.seed + d)
        ang = np.angle(lam)
        outside = np.abs(lam) > np.array([embeddability_region(d, a) for a in ang]) + 1e-9
        outside &= np.abs(lam.imag) > 1e-9
        path = os.path.join(args.outdir, f"embeddability_d{d}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "phi", "radius", "re", "im"])
            for p, rr in zip(phi, r):
                w.writerow(["curve"] + ["%.17g" % v for v in (p, rr, rr * np.cos(p), rr * np.sin(p))])
            for z, out in zip(lam, outside):
                kind = "outside" if out else "sample"
                w.writerow([kind] + ["%.17g" % v for v in (np.angle(z), abs(z), z.real, z.imag)])
        print(f"d={d}: {outside.sum()} of {lam.size} eigenvalues outside the region -> {path}")


if __name__ == "__main__":
    main()
