"""Transmission through two attractive delta wells at x = -a and x = +a.

Prints the first transmission maxima on (0, 10] and checks R + T = 1.  Pass an
output path to also write the curve as CSV.

    python3 demos/double_delta.py [curve.csv]
"""

import sys

import numpy as np

from heliumci import double_delta_transmission
from heliumci.pipeline import local_maxima

k = np.linspace(1e-3, 10.0, 4000)
t, T, R = double_delta_transmission(k, a=1.0, a0=1.0)
print(f"max |R + T - 1| = {np.max(np.abs(R + T - 1)):.1e}")
for i in local_maxima(T):
    print(f"peak at k = {k[i]:.4f}, T = {T[i]:.6f}")

if len(sys.argv) > 1:
    np.savetxt(sys.argv[1], np.column_stack([k, T, R]), delimiter=",", header="k,T,R", comments="")
