#!/usr/bin/env python3
"""Plot the CSVs written by `stdic reproduce <name> --out DIR`.

    python3 docs/plot_results.py DIR [--save PREFIX]

One figure per component: true vs mean measured displacement (top) and mean
L1 error per frame (bottom), a line per method, one noise level at a time.
Strain runs (strain.csv) get an extra figure of mean u_x / v_y against time.
"""

import argparse
import glob
import os

import matplotlib.pyplot as plt
import pandas as pd


def load_plots(directory):
    frames = []
    for path in sorted(glob.glob(os.path.join(directory, "plot_*_*.csv"))):
        component, method = os.path.basename(path)[len("plot_"):-len(".csv")].split("_", 1)
        df = pd.read_csv(path)
        df["component"] = component
        df["method"] = method
        frames.append(df)
    if not frames:
        raise SystemExit(f"no plot_*.csv files in {directory}")
    return pd.concat(frames, ignore_index=True)


def plot_displacements(df, level, save):
    for component, sub in df[df.noise_level == level].groupby("component"):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
        truth = sub.drop_duplicates("frame").sort_values("t_seconds")
        top.plot(truth.t_seconds, truth["true"], "k-", lw=1, label="truth")
        for method, m in sub.groupby("method"):
            m = m.sort_values("t_seconds")
            top.plot(m.t_seconds, m.measured_mean, ".", ms=3, label=method)
            bottom.plot(m.t_seconds, m.mean_l1, "-", lw=1, label=method)
        top.set_ylabel(f"{component} (px)")
        bottom.set_ylabel("mean |error| (px)")
        bottom.set_xlabel("t")
        top.legend()
        fig.suptitle(f"{component}, noise {level:g}")
        fig.tight_layout()
        if save:
            fig.savefig(f"{save}_{component}_n{level:g}.png", dpi=150)


def plot_strain(directory, save):
    path = os.path.join(directory, "strain.csv")
    if not os.path.exists(path):
        return
    df = pd.read_csv(path)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, comp, true in zip(axes, ("ux", "vy"), ("exx_true", "eyy_true")):
        for (method, level), m in df.groupby(["method", "noise_level"]):
            ax.errorbar(m.t_seconds, m[f"mean_{comp}"] * 1e6, yerr=m[f"sd_{comp}"] * 1e6, fmt=".", capsize=2,
                        label=f"{method} n={level:g}")
        t = df.drop_duplicates("frame").sort_values("t_seconds")
        ax.plot(t.t_seconds, t[true] * 1e6, "k-", lw=1, label="truth")
        ax.set_xlabel("t")
        ax.set_ylabel(f"mean {comp} (microstrain)")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    if save:
        fig.savefig(f"{save}_strain.png", dpi=150)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("directory")
    parser.add_argument("--noise", type=float, help="noise level to show (default: the largest)")
    parser.add_argument("--save", help="write PNGs with this prefix instead of opening windows")
    args = parser.parse_args()
    if args.save:
        plt.switch_backend("Agg")
    df = load_plots(args.directory)
    level = args.noise if args.noise is not None else df.noise_level.max()
    plot_displacements(df, level, args.save)
    plot_strain(args.directory, args.save)
    if not args.save:
        plt.show()


if __name__ == "__main__":
    main()
