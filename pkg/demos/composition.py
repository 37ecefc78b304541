"""Connection of a product psi1 psi2: closed-form blocks against direct conjugation.

Also prints how far the literal transcription of the published expansions lands
from the conjugation, block by block.

Run:  python3 demos/composition.py
"""
import numpy as np

from spinframe.generators import random_type_a, random_type_b
from spinframe.geometry import connection_field
from spinframe.solutions import (
    TypeAPoint,
    TypeBPoint,
    compose_connection_A,
    compose_connection_B,
    composition_oracle,
    formula_discrepancies,
)
from spinframe.spin_field import Product

rng = np.random.default_rng(7)
x = rng.uniform(-1, 1, 4)
psi2 = random_type_b(rng)
conn2 = connection_field(psi2, x)

for label, psi1, cls, compose in (("type A", random_type_a(rng), TypeAPoint, compose_connection_A),
                                  ("type B", random_type_b(rng), TypeBPoint, compose_connection_B)):
    p = cls.from_spec(psi1, x)
    composed = compose(p, conn2, verify=False).conn
    oracle = composition_oracle(p, conn2)
    product = connection_field(Product((psi1, psi2)), x)
    print(f"psi1 {label}:")
    print(f"  closed form vs conjugation      {composed.max_diff(oracle):.1e}")
    print(f"  closed form vs product extraction {composed.max_diff(product):.1e}")
    for block, err in formula_discrepancies(p, conn2).items():
        flag = "" if err < 1e-10 else "   <- printed expansion disagrees"
        print(f"  printed {block:14s} {err:.1e}{flag}")
