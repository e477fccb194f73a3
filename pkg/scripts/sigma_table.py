"""Table of sigma(alpha)_k for a few frequency vectors, enumeration vs continued fractions.

    python3 scripts/sigma_table.py [--kmax 12]
"""
import argparse
import math

from singkam.arithmetic import bruno_sum, sigma_cf, sigma_sequence

ALPHAS = {
    "golden": [1.0, (1 + math.sqrt(5)) / 2],
    "sqrt2": [1.0, math.sqrt(2)],
    "sqrt3-1": [1.0, math.sqrt(3) - 1],
    "e-2": [1.0, math.e - 2],
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmax", type=int, default=12)
    args = ap.parse_args()
    for name, al in ALPHAS.items():
        enum = sigma_sequence(al, args.kmax)
        cf = [sigma_cf(al, k) for k in range(args.kmax + 1)]
        bruno = bruno_sum([max(x, 1e-300) for x in enum])
        print(f"{name:8s} agree={enum == cf}  bruno partial={bruno.total:.4f}")
        print("   " + " ".join(f"{x:.3e}" for x in enum))


if __name__ == "__main__":
    main()
