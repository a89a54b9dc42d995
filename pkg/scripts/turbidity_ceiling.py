"""Recompute the frozen clean-turbidity ceiling.

Protocol: 1,000 stage-0 renders at darkness 0, seeds 0..999 with the tint
palette cycled, scored with turbidity_score; the ceiling is the 99th
percentile.  The result is frozen as dataset.CLEAN_TURBIDITY_CEILING
(rounded to three significant figures); rerun this after any change to the
clean-water renderer and update the constant.
"""

import numpy as np

from aquasight.dataset import CLEAN_TURBIDITY_CEILING, TINTS, generate_sample, turbidity_score


def main() -> None:
    scores = [
        turbidity_score(generate_sample(TINTS[i % len(TINTS)], 0, 0.0, i).pixels)
        for i in range(1000)
    ]
    p99 = float(np.percentile(scores, 99))
    frozen = float(f"{p99:.3e}")
    print(f"p99      = {p99:.6e}")
    print(f"max      = {max(scores):.6e}")
    print(f"frozen   = {frozen:.3e}")
    print(f"current  = {CLEAN_TURBIDITY_CEILING:.3e}")
    if frozen != CLEAN_TURBIDITY_CEILING:
        print("MISMATCH: update CLEAN_TURBIDITY_CEILING in aquasight/dataset.py")


if __name__ == "__main__":
    main()
