"""The headline experiment: pinned-set size across the dimension threshold.

Sets of dimension above (d+1)/2 = 1.5 should hold a stable lower bound on
their pinned distance sets as the mollification scale shrinks; the
dimension-1.0 corner Cantor keeps losing mass.  The exceptional-set probe
then looks for pins whose support estimate stays below a floor.

This is the demo-scale version; the CLI runs the same machinery from a
config file (`pinlab sweep --config ...`).
"""

from pinlab.experiments import exceptional_probe, sweep_threshold

cfg = {"d": "2", "dims": "1.0 1.6 1.8", "epsilons": "2^-4 2^-5 2^-6",
       "level": "5", "pins": "8", "seed": "7"}
report = sweep_threshold(cfg)

print("threshold (d+1)/2 = 1.5")
for dim, verdict in report.verdicts.items():
    ann = report.annotations[dim]
    print(f"dim {dim}: {verdict:9s} (above threshold: {ann['above_threshold']}, "
          f"exceptional-dim bound d+1-s = {ann['exceptional_bound']:.2f})")

print("\nper-(dim, eps) pin-averaged energies and hinge counts:")
for row in report.energy_rows:
    print(f"  dim {row['dim']} eps {row['eps']:.4f}: "
          f"L2 energy {row['l2_energy']:.3f}, hinge {row['hinge_integrated']:.3f}")

probe_cfg = {"generator": "circle", "n_atoms": "256", "d": "2",
             "pin_policy": "fixed", "pin": "0.5 0.5", "pins": "50",
             "epsilons": "2^-6 2^-7", "floor": "0.1", "seed": "3"}
probe = exceptional_probe(probe_cfg)
print("\ncircle toy (all pins at the center -- a single pinned distance):")
print("flagged fraction per eps:", probe.flagged_fraction)
print("persistent low-support pins:", len(probe.persistent_pins), "of 50")
