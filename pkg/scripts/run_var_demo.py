"""Cross-channel coupling demo with the first-order vector fit.

Simulates a four-channel VAR(1) process with nearest-neighbor coupling
under measurement noise, then compares the coupling (off-diagonal) norm
of the first least-squares estimate against the refined one. Measurement
noise biases the one-shot regression toward zero, so the raw estimate
understates how strongly the channels drive each other; refitting on the
denoised trajectory restores most of the coupling strength.

To run on recorded data instead, pass --input with a CSV holding one
column per channel (optional header row).
"""

import argparse

from arid.experiments import ExperimentConfig, run_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="runs/var_demo")
    parser.add_argument("--input", default=None, help="optional CSV, one column per channel")
    parser.add_argument("--has-header", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cfg = ExperimentConfig(
        command="fit-var",
        out_dir=args.out_dir,
        input=args.input,
        has_header=args.has_header,
        seed=args.seed,
        rho=3.0,
        lam=0.0,
        iterations=50,
        n_steps=400,
        transition_std=0.1,
        measurement_std=0.1,
    )
    report = run_experiment(cfg)
    results = report.results

    print("first-order vector fit")
    print(f"  coupling norm, first estimate: {results['offdiag_norm_first']:.4f}")
    print(f"  coupling norm, refined:        {results['offdiag_norm_final']:.4f}")
    print(f"  iterations run:                {results['iterations_run']}")
    if "e_norm_theta" in results:
        print(f"  transition-matrix error:       {results['e_norm_theta']:.4f}")
        print(f"  trajectory error:              {results['e_x']:.4f}")
    print(f"denoised channels written to {args.out_dir}/denoised.csv")


if __name__ == "__main__":
    main()
