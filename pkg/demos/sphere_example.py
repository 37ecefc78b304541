"""Walk through the preset type-A field: spin check, connection, curvature, immersion.

Run:  python3 demos/sphere_example.py
"""
import numpy as np

from spinframe import PaperExample, check_spin, connection_field, curvature, frame
from spinframe.immersion import PathSpec, VielbeinField, initial_state, integrate_path, paper_example_immersion

pe = PaperExample()
x = np.array([0.0, 0.3, 0.4, -0.2])
d = 1 + x[1:] @ x[1:]
print(f"point x = {x.tolist()},  1 + r^2 = {d:.4f}")

rep = check_spin(pe, x)
print(f"reverse(psi) psi - 1: {rep.normalization_residual:.1e}; every e_I grade 1: {all(rep.sandwich_grade_ok)}")

conn = connection_field(pe, x)
print("\nextrinsic curvature H_mu^{mu 5} (expect -2/(1+r^2) = %.6f)" % (-2 / d))
for mu in (1, 2, 3):
    print(f"  H_{mu}^{{{mu}5}} = {conn.W[mu, mu, 5]: .6f}")
print(f"omega_1^{{12}} = {conn.W[1, 1, 2]: .6f}   (2 x2/(1+r^2) = {2 * x[2] / d: .6f})")

R = curvature(pe, x).R
print(f"\nR_12^12 = {R[1, 2, 1, 2]: .6f}   (-4/(1+r^2)^2 = {-4 / d**2: .6f})")

E = frame(pe, x).matrix
print("\nmoving frame rows e_1 and e_5 over the fixed basis:")
print("  e_1 =", np.round(E[1], 6))
print("  e_5 =", np.round(E[5], 6))

# integrate dq = theta^I e_I from the origin and compare with the closed-form map
vb = VielbeinField.paper_example()
origin = np.zeros(4)
path = PathSpec((tuple(origin), (0.0, 0.3, 0.0, 0.0), tuple(x)), 128)
end = integrate_path(pe, vb, path, initial_state(pe, origin, paper_example_immersion(origin)))
print("\nintegrated q  =", np.round(end.q, 8))
print("closed-form q =", np.round(paper_example_immersion(x), 8))
print(f"max |difference| = {np.max(np.abs(end.q - paper_example_immersion(x))):.1e}")
