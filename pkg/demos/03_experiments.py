"""
Monte Carlo experiments at desk scale
=====================================

The sim module wraps the pipeline in seeded sweeps. These are the same runs
the command-line tool performs (``nfisac se-vs-snr --preset desk``).
"""

from nfisac.sim import PRESETS, run_beampattern, run_se_vs_bandwidth, run_se_vs_snr

cfg = PRESETS["desk"].replace(trials=20, snr_grid_db=(-10.0, 0.0, 10.0))

table = run_se_vs_snr(cfg)
for method in table.methods():
    print(f"{method:22s}", " ".join(f"{v:6.3f}" for v in table.column("mean_se", method)))

# %%
# Beam squint grows with bandwidth; the BSA baseband claws part of it back.
bw = run_se_vs_bandwidth(cfg.replace(bandwidth_grid=(0.0, 20e9, 40e9), compare_farfield=False, baselines=("hybrid",)))
for method in bw.methods():
    print(f"{method:24s}", " ".join(f"{v:6.3f}" for v in bw.column("mean_se", method)))

# %%
# Beampattern of one design, averaged over subcarriers.
near = cfg.replace(range_interval=(0.05, 0.3), ranges_in_fraunhofer=True)
pattern = run_beampattern(near)
print("target gains", pattern.target_gains.round(4), "grid max", pattern.gains.max().round(4))
pattern.to_csv("beampattern.csv")
