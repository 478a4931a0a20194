#!/usr/bin/env python3
# Copyright 2026 The bearing-dx Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerate the MAT-v5 fixtures under tests/data with scipy.

The files are committed; rerun only when adding a fixture.
"""

import argparse
import pathlib

import numpy as np
from scipy.io import savemat


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "tests" / "data",
                    type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    # CWRU-style drive-end channel as a column vector, plus neighbours the
    # parser has to step over.
    cwru = {
        "X098_DE_time": np.array([[1.0], [2.0], [3.0]]),
        "X098_FE_time": np.array([[0.5], [-0.25], [0.125], [4.0]]),
        "X098RPM": np.array([[1797.0]]),
        "note": "drive end",
    }
    savemat(args.out / "cwru_small.mat", cwru, format="5", do_compression=False)
    savemat(args.out / "cwru_small_z.mat", cwru, format="5", do_compression=True)

    savemat(args.out / "single_row.mat",
            {"sig": np.array([[0.5, -1.5, 2.25, 8.0]], dtype=np.float32),
             "counts": np.array([[1, 2, 3]], dtype=np.int16)},
            format="5", do_compression=False)

    savemat(args.out / "complex.mat",
            {"z": np.array([[1 + 2j], [3 - 1j]]), "x": np.array([[7.0]])},
            format="5", do_compression=False)


if __name__ == "__main__":
    main()
