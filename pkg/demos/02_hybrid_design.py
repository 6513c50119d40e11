"""
Designing one hybrid ISAC beamformer
====================================

Draw a random multipath channel, pick two radar targets, and build the
hybrid beamformer for a trade-off of 0.5 between communications and sensing.
"""

import numpy as np

from nfisac import (
    ArrayConfig,
    Scenario,
    SteeringParams,
    TradeoffConfig,
    build_channels,
    build_dictionary,
    design_hybrid,
    optimal_beamformer,
    radar_beamformer,
    sample_paths,
    spectral_efficiency,
    subcarrier_frequencies,
)

rng = np.random.default_rng(1)
tx = ArrayConfig.half_wavelength(32, 300e9)
rx = ArrayConfig.half_wavelength(8, 300e9)
d_f = tx.fraunhofer_distance

freqs = subcarrier_frequencies(300e9, 20e9, 16)
etas = tx.carrier_frequency / freqs
paths = sample_paths(rng, Scenario(num_paths=4, range_interval=(0.05 * d_f, 0.3 * d_f)))
H = build_channels(paths, tx, rx, freqs, squint=True).per_subcarrier
H_bar = build_channels(paths, tx, rx, freqs, squint=False).per_subcarrier

# %%
# The design works from the squint-free channel; the precoders are then
# scored on the channel the subcarriers actually see.
F_opt = [optimal_beamformer(h, 2) for h in H_bar]
targets = [SteeringParams(-0.4, 0.1 * d_f), SteeringParams(0.5, 0.2 * d_f)]
F_R = radar_beamformer(targets, tx)
dictionary = build_dictionary(tx, 25, 16, (0.05 * d_f, 0.3 * d_f))

design = design_hybrid(dictionary, F_opt, F_R, TradeoffConfig(0.5, 4, 2, 2), etas)
print("selected atoms:", [tuple(round(v, 3) for v in dictionary.grid[p]) for p in design.selected_atoms])
print("residual per atom:", np.round(design.residual_history, 3))

# %%
noise = 0.1  # 10 dB
for label, F in [("fully digital", [optimal_beamformer(h, 2) for h in H]),
                 ("hybrid, no BSA", design.precoders(bsa=False)),
                 ("hybrid, BSA", design.precoders(bsa=True))]:
    print(f"  {label:15s} SE = {spectral_efficiency(H, None, F, noise, 2):.3f} bit/s/Hz")
