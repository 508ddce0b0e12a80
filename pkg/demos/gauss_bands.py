"""Gauss-map energy, tension and Hopf density on dyadic radial bands."""

# %%
import warnings

from afcmc import GraphSurface, gauss_map_diagnostics, perturbed_isotropic, solve_cmc
from afcmc.errors import ResolutionWarning

# A Euclidean round sphere: the Gauss map is conformal and harmonic.
sphere = GraphSurface.sphere(50.0, center=(30.0, 0.0, 0.0), L_max=12)
diag = gauss_map_diagnostics(sphere)
print("tension:", diag.tension_sup.max(), " hopf:", diag.hopf_l1.max())

# %%
# An off-center leaf in a small generic perturbation, with translations pinned.
field = perturbed_isotropic(0.05, inner_radius=1.0)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", ResolutionWarning)
    leaf = solve_cmc(field, (90.0, 0.0, 0.0), 100.0, L_max=12, pin_translations=True)
diag = gauss_map_diagnostics(leaf.surface, field, band_width=0.5)
for row in diag.rows():
    print(row)
print("end peaked:", diag.profile_is_end_peaked())
for note in diag.notes:
    print("note:", note)
