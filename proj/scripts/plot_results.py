#!/usr/bin/env python3
# Copyright 2026 The ashc Authors.
# SPDX-License-Identifier: Apache-2.0
"""Plot the CSV files written by ashc_cli.

Usage: scripts/plot_results.py OUT_DIR [--save DIR]

Reads whichever of sim_hier.csv, sim_mrel.csv, scan_bound_*.csv and
bound_transient.csv exist in OUT_DIR. Without --save the figures are shown
interactively; with it they are written as PNG files.
"""

import argparse
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg" if "--save" in sys.argv else matplotlib.get_backend())
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}


def plot_sim(data, title):
    fig, ax = plt.subplots(3, 1, sharex=True, figsize=(8, 8))
    t = data["t"]
    ax[0].plot(t, data["y"], label="y")
    ax[0].plot(t, data["psi"], "--", label="psi")
    ax[0].set_ylabel("output")
    ax[0].legend()
    ax[1].plot(t, data["e_y"])
    ax[1].set_ylabel("psi - y")
    ax[2].plot(t, data["u"], label="u")
    ax[2].plot(t, data["xi"], "--", label="xi")
    ax[2].set_ylabel("duty")
    ax[2].set_xlabel("t [s]")
    ax[2].legend()
    fig.suptitle(title)
    return fig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--save", type=pathlib.Path, help="write PNGs here instead of showing")
    args = ap.parse_args()

    figs = {}
    for name, title in (("sim_hier", "closed loop"), ("sim_mrel", "m-relation")):
        path = args.out_dir / f"{name}.csv"
        if path.exists():
            figs[name] = plot_sim(read_csv(path), title)
    for path in sorted(args.out_dir.glob("scan_bound_*.csv")):
        d = read_csv(path)
        fig, ax = plt.subplots()
        ax.plot(d["xi"], d["vartheta_norm"])
        ax.set_xlabel("xi")
        ax.set_ylabel("|vartheta(xi)|")
        ax.set_title(path.stem)
        figs[path.stem] = fig
    path = args.out_dir / "bound_transient.csv"
    if path.exists():
        d = read_csv(path)
        fig, ax = plt.subplots()
        ax.plot(d["t"], d["bound"], marker="o")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("output error bound")
        figs["bound_transient"] = fig

    if not figs:
        sys.exit(f"no ashc CSV files in {args.out_dir}")
    if args.save:
        args.save.mkdir(parents=True, exist_ok=True)
        for name, fig in figs.items():
            fig.savefig(args.save / f"{name}.png", dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
