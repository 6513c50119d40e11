"""
Near-field steering and beam squint
===================================

A 32-element half-wavelength array at 300 GHz has a Fraunhofer distance of
about half a meter, so users a few centimeters to tens of centimeters away
sit in the near field: the beam can focus on a point, not just a direction.
"""

import numpy as np

from nfisac import ArrayConfig, SteeringParams, squint_map, steering_vector

cfg = ArrayConfig.half_wavelength(32, 300e9)
print(f"aperture {cfg.aperture * 1e3:.2f} mm, Fraunhofer distance {cfg.fraunhofer_distance:.3f} m")

# %%
# Focusing: correlation between a beam focused at 8 cm and probes at other
# ranges along the same direction. In the far field these would all be ~1.
focus = SteeringParams(0.3, 0.08)
a = steering_vector(cfg, focus)
for r in (0.04, 0.06, 0.08, 0.12, 0.24, 1.0):
    b = steering_vector(cfg, (0.3, r))
    print(f"  range {r:5.2f} m  |a^H b| = {abs(np.vdot(a, b)):.3f}")

# %%
# Beam squint: the same analog weights at another subcarrier land somewhere
# else. The squint map predicts where.
for f_m in (290e9, 300e9, 310e9):
    eta = cfg.carrier_frequency / f_m
    landed = squint_map(focus, eta)
    print(f"  f_m = {f_m / 1e9:.0f} GHz -> direction {landed.direction:.4f}, range {landed.range * 100:.2f} cm")
