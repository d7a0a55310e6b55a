#!/usr/bin/env python3
"""Generate the synthetic surrogate fixtures for benchmark tables that are not
redistributable offline (diabetes, annealing, bridges).

Each surrogate reproduces the shape of the original table: sample count,
categorical/numerical feature split, class count and class balance. Feature
values are drawn from class-conditional distributions so that feature
selection and association measures have real signal to find. The output is
fully determined by the seed below.
"""
import csv
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[2] / "tests" / "data"
SEED = 20240101


def categorical(rng, y, n_classes, levels, signal, missing):
    base = rng.dirichlet(np.ones(len(levels)) * 2.0)
    per_class = []
    for _ in range(n_classes):
        shift = rng.dirichlet(np.ones(len(levels)))
        per_class.append((1.0 - signal) * base + signal * shift)
    col = [levels[rng.choice(len(levels), p=per_class[c])] for c in y]
    return [("?" if rng.random() < missing else v) for v in col]


def numerical(rng, y, n_classes, mean, sd, signal, decimals, missing, lo=None):
    offsets = rng.normal(0.0, signal * sd, size=n_classes)
    vals = rng.normal(mean + offsets[y], sd)
    if lo is not None:
        vals = np.maximum(vals, lo)
    out = []
    for v in vals:
        if rng.random() < missing:
            out.append("?")
        elif decimals == 0:
            out.append(str(int(round(v))))
        else:
            out.append(f"{v:.{decimals}f}")
    return out


def labels(rng, counts, names):
    y = np.concatenate([np.full(c, i) for i, c in enumerate(counts)])
    rng.shuffle(y)
    return y, [names[i] for i in y]


def write(name, header, columns, label_col):
    rows = list(zip(*columns, label_col))
    with open(OUT / f"{name}.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def diabetes(rng):
    y, lab = labels(rng, [320, 200], ["Positive", "Negative"])
    names = ["Gender", "Polyuria", "Polydipsia", "sudden_weight_loss", "weakness",
             "Polyphagia", "Genital_thrush", "visual_blurring", "Itching",
             "Irritability", "delayed_healing", "partial_paresis",
             "muscle_stiffness", "Alopecia", "Obesity"]
    cols = [numerical(rng, y, 2, 48.0, 12.0, 0.6, 0, 0.0, lo=16)]
    for i, _ in enumerate(names):
        levels = ["Male", "Female"] if i == 0 else ["No", "Yes"]
        cols.append(categorical(rng, y, 2, levels, rng.uniform(0.1, 0.8), 0.0))
    write("diabetes", ["Age"] + names + ["class"], cols, lab)


def annealing(rng):
    y, lab = labels(rng, [8, 88, 608, 60, 34], ["1", "2", "3", "5", "U"])
    cols, header = [], []
    for i in range(34):
        n_levels = [2, 2, 3, 4, 5][i % 5]
        levels = [chr(ord("A") + k) for k in range(n_levels)]
        cols.append(categorical(rng, y, 5, levels, rng.uniform(0.0, 0.7),
                                0.05 if i % 4 == 0 else 0.0))
        header.append(f"cat{i + 1:02d}")
    for name, mean, sd in [("thick", 1.2, 0.8), ("width", 1100.0, 300.0),
                           ("len", 800.0, 350.0), ("strength", 60.0, 40.0)]:
        cols.append(numerical(rng, y, 5, mean, sd, 0.8, 3, 0.0, lo=0.0))
        header.append(name)
    write("annealing", header + ["class"], cols, lab)


def bridges(rng):
    y, lab = labels(rng, [44, 22, 40], ["STEEL", "WOOD", "IRON"])
    spec = [("river", ["A", "M", "O", "Y"]), ("purpose", ["HIGHWAY", "RR", "AQUEDUCT", "WALK"]),
            ("length", ["SHORT", "MEDIUM", "LONG"]), ("lanes", ["1", "2", "4", "6"]),
            ("clear_g", ["N", "G"]), ("t_or_d", ["THROUGH", "DECK"]),
            ("span", ["SHORT", "MEDIUM", "LONG"]), ("rel_l", ["S", "S-F", "F"]),
            ("type", ["WOOD", "SUSPEN", "SIMPLE-T", "ARCH", "CANTILEV", "CONT-T"])]
    cols = [numerical(rng, y, 3, 1900.0, 30.0, 1.5, 0, 0.0)]
    header = ["erected"]
    for name, levels in spec:
        cols.append(categorical(rng, y, 3, levels, rng.uniform(0.2, 0.8), 0.03))
        header.append(name)
    write("bridges", header + ["material"], cols, lab)


def main():
    rng = np.random.default_rng(SEED)
    diabetes(rng)
    annealing(rng)
    bridges(rng)


if __name__ == "__main__":
    main()
