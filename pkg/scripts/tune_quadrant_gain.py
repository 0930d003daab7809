"""Compare saturated per-mode LQR controllers on the four-quadrant system.

For each mode i the gain is dlqr(A_i, B, I, 1); the script reports whether
the safe set and terminal set iterations converge and the resulting margin.
"""
import argparse
import time

from pwacert.certify import CertificationError, assemble_certificate
from pwacert.library import quadrant_controller, quadrant_gain, quadrant_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps-bar", type=float, default=1e-3)
    ap.add_argument("--max-iters", type=int, default=120)
    args = ap.parse_args()
    sys_ = quadrant_system()
    for mode in range(4):
        K = quadrant_gain(mode)
        t0 = time.perf_counter()
        try:
            cert = assemble_certificate(sys_, quadrant_controller(K), eps_bar=args.eps_bar,
                                        max_iters=args.max_iters)
            msg = (f"F_max iters {cert.f_max_iterations}, k_bar {cert.k_bar}, "
                   f"alpha {cert.alpha:.9f}, {cert.stability_verdict}")
        except CertificationError as exc:
            msg = f"failed: {exc}"
        print(f"mode {mode + 1} K={K.round(4)}: {msg} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
