"""Averaged six-model accuracy table on complementary synthetic data.

    python scripts/table1_synthetic.py --seeds 0 1 2
"""
import argparse
import logging

from multisense.study import ROWS, best_camera, desk_settings, mean_accuracies, run_seed


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--cnn-epochs", type=int, default=100)
    ap.add_argument("--fusion-epochs", type=int, default=40)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    results = []
    for seed in args.seeds:
        settings = desk_settings(seed, cnn_epochs=args.cnn_epochs, fusion_epochs=args.fusion_epochs)
        r = run_seed(seed, settings)
        print(f"seed {seed} ({r.clean_seconds:.0f} s): " + ", ".join(f"{k} {v:.3f}" for k, v in r.clean.items()))
        results.append(r)

    mean = mean_accuracies(results)
    print(f"\n{'model':<22}{'mean accuracy':>14}")
    for row in ROWS:
        print(f"{row:<22}{mean[row]:>14.4f}")
    print(f"\nintermediate - best camera: {100 * (mean['intermediate_fusion'] - best_camera(mean)):+.1f} pp")


if __name__ == "__main__":
    main()
