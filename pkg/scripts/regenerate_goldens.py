#!/usr/bin/env python3
"""Regenerate the bundled benchmark golden files from the ODE reference."""

import argparse

from vqdyn.benchmark import benchmark_probabilities, golden_path

CONFIGS = [("h2", 0.06), ("h4", 0.06), ("h8", 0.06), ("h16", 0.06),
           ("h4", 0.222), ("h8", 0.222), ("h16", 0.222)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.parse_args()
    for preset, omega in CONFIGS:
        probs = benchmark_probabilities(preset, omega, regenerate=True)
        print(f"{golden_path(preset, omega)}  P_ground={probs[0]:.8f}")


if __name__ == "__main__":
    main()
