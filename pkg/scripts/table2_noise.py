"""Accuracy drop of both fusion methods when one camera is replaced by uniform noise.

    python scripts/table2_noise.py --seeds 0 1 2 --modality cam_left
"""
import argparse
import logging

from multisense.study import desk_settings, mean_accuracies, noise_drops, run_seed


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--modality", default="cam_left")
    ap.add_argument("--cnn-epochs", type=int, default=100)
    ap.add_argument("--fusion-epochs", type=int, default=40)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    results = []
    for seed in args.seeds:
        settings = desk_settings(seed, cnn_epochs=args.cnn_epochs, fusion_epochs=args.fusion_epochs)
        r = run_seed(seed, settings, corrupt=args.modality)
        print(f"seed {seed}: clean dec {r.clean['decision_fusion']:.3f} int {r.clean['intermediate_fusion']:.3f} | "
              f"noisy dec {r.noisy['decision_fusion']:.3f} int {r.noisy['intermediate_fusion']:.3f}")
        results.append(r)

    clean, noisy = mean_accuracies(results), mean_accuracies(results, "noisy")
    drops = noise_drops(results)
    print(f"\n{'model':<22}{'clean':>8}{'noisy':>8}{'drop (pp)':>11}")
    for row in ("decision_fusion", "intermediate_fusion"):
        print(f"{row:<22}{clean[row]:>8.4f}{noisy[row]:>8.4f}{100 * drops[row]:>11.2f}")
