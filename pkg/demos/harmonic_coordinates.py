"""Building asymptotically harmonic coordinates for g = (1 + 1/r) delta."""

# %%
import numpy as np

from afcmc import build_harmonic_map, example51, source_term, transform_metric
from afcmc.harmonic_coords import cube_directions, ellipticity_check, harmonic_residual
from afcmc.metric import coordinate_laplacian

field = example51()

# %%
# r^2 times the coordinate Laplacian of x^k tends to an angular function S.
src = source_term(field)
dirs = src.S.basis.directions
print("max |S - xhat/2| at the nodes:", np.abs(src.S.values() - 0.5 * dirs.T).max())

# %%
# The correction solves the spherical Poisson equation; here y = x - x/(4r).
cmap = build_harmonic_map(field)
print("angular coefficients of xhat in the correction:")
print(np.round(cmap.xhat_coefficients(), 10))

# %%
# Laplacian decay improves by one power of r.
d = cube_directions()
for r in (1e2, 1e3, 1e4):
    gy = np.abs(harmonic_residual(cmap, field, r * d)).max() * r ** 3
    gx = np.abs(coordinate_laplacian(field, r * d)).max() * r ** 3
    print(f"r = {r:7.0f}   r^3 |Lap y| = {gy:.4f}   r^3 |Lap x| = {gx:.1f}")

# %%
# In the new coordinates the 1/r part has eigenvalues {1, 3/2, 3/2} and trace 4.
tm = transform_metric(cmap, field)
x = 1e3 * d
print("eigenvalues of r h~:", np.round(np.linalg.eigvalsh(1e3 * tm.h_tilde(x[:1]))[0], 4))
print(ellipticity_check(tm).summary())
