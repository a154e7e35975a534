"""Band-width comparisons between studies (varying vs constant, C1 vs C2, PL vs Gaussian IQR).

Runs the four mono studies; the varying ones take several minutes each.
"""

import argparse

import numpy as np

from plurigauss.study import StudyConfig, run_study


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--sims", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    args = p.parse_args()

    runs = {}
    for kind in ("mono-c1-constant", "mono-c2-constant", "mono-c1-varying", "mono-c2-varying"):
        runs[kind] = run_study(StudyConfig(kind=kind, n_sims=args.sims, seed=args.seed), threads=args.threads)
        print(f"done {kind}")

    def width(kind, lo=5, hi=95, est="pl"):
        return runs[kind].band_width(est, lo, hi)[:, 0]

    for m in ("c1", "c2"):
        frac = np.mean(width(f"mono-{m}-varying") > width(f"mono-{m}-constant"))
        print(f"{m}: varying 5-95 band wider than constant at {frac:.0%} of lags")
    frac = np.mean(width("mono-c1-constant") > width("mono-c2-constant"))
    print(f"constant: C1 5-95 band wider than C2 at {frac:.0%} of lags")
    s = runs["mono-c1-constant"]
    far = s.lags >= 100
    ratio = width("mono-c1-constant", 25, 75)[far] / width("mono-c1-constant", 25, 75, "gauss")[far]
    print(f"C1 constant: PL/Gaussian IQR ratio at h>=100: max {ratio.max():.2f}, median {np.median(ratio):.2f}")


if __name__ == "__main__":
    main()
