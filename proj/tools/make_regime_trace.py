#!/usr/bin/env python3
"""Writes a regime-switching bandwidth trace (step,mbps) to stdout.

The link alternates between a congested regime (2-3 Mbps) and a clear one
(7-8 Mbps); each regime lasts 2-6 decision intervals.
"""
import argparse
import random

parser = argparse.ArgumentParser()
parser.add_argument("--seed", type=int, default=7)
parser.add_argument("--length", type=int, default=1000)
args = parser.parse_args()

rng = random.Random(args.seed)
values = []
low = True
while len(values) < args.length:
    base = 2.0 if low else 7.0
    for _ in range(rng.randint(2, 6)):
        values.append(round(base + rng.random(), 3))
    low = not low

print("step,mbps")
for i, v in enumerate(values[: args.length]):
    print(f"{i},{v}")
