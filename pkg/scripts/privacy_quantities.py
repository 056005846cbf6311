"""Noise calibration against participation probability p.

For each target (eps', delta') prints the amplified base epsilon, the total
noise std sigma, the per-client share at the expected participant count, and
the decoder's privacy-noise variance sigma^2/|P_t|^2.
"""
from __future__ import annotations

import argparse

from airfer.privacy import PrivacyBudget, amplify_by_sampling


def rows(epsilons, delta, ps, n):
    for eps in epsilons:
        for p in ps:
            spec = amplify_by_sampling(PrivacyBudget(eps, delta), p, n)
            m = n * p / (1.0 - (1.0 - p) ** n)  # E|P_t| given at least one participant
            yield {
                "epsilon": eps,
                "p": p,
                "base_epsilon": spec.base_epsilon,
                "sigma_total": spec.sigma_total,
                "sigma_client": spec.sigma_total / m**0.5,
                "decoder_var": spec.sigma_total**2 / m**2,
            }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="1,5")
    ap.add_argument("--delta", type=float, default=1e-5)
    ap.add_argument("--p", default="0.1,0.25,0.5,0.75,1.0")
    ap.add_argument("--n", type=int, default=20)
    args = ap.parse_args()

    eps = [float(x) for x in args.eps.split(",")]
    ps = [float(x) for x in args.p.split(",")]
    print(f"{'eps':>5} {'p':>5} {'base_eps':>9} {'sigma':>8} {'sigma_c':>8} {'dec_var':>9}")
    for r in rows(eps, args.delta, ps, args.n):
        print(
            f"{r['epsilon']:>5g} {r['p']:>5g} {r['base_epsilon']:>9.4f} {r['sigma_total']:>8.4f}"
            f" {r['sigma_client']:>8.4f} {r['decoder_var']:>9.5f}"
        )


if __name__ == "__main__":
    main()
