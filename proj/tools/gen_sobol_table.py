#!/usr/bin/env python3
"""Regenerates src/sobol_direction_numbers.cpp.

Source: the new-joe-kuo-6.21201 primitive polynomials and initial direction
numbers as shipped with SciPy (scipy/stats/_sobol_direction_numbers.npz).
"""
import os
import sys

import numpy as np
from scipy.stats import _sobol

DIMENSIONS = 1024

path = os.path.join(os.path.dirname(_sobol.__file__), "_sobol_direction_numbers.npz")
data = np.load(path)
poly, vinit = data["poly"], data["vinit"]

out = sys.stdout if len(sys.argv) < 2 else open(sys.argv[1], "w")
out.write("// Generated by tools/gen_sobol_table.py. Do not edit.\n")
out.write("// Joe & Kuo, new-joe-kuo-6.21201 (dimensions 2..%d).\n\n" % DIMENSIONS)
out.write('#include "sobol_direction_numbers.hpp"\n\n')
out.write("namespace qmcg::detail {\n\n")
out.write("const std::array<SobolPolynomial, kSobolTableDimension - 1> kSobolPolynomials = {{\n")
for j in range(1, DIMENSIONS):
    p = int(poly[j])
    s = p.bit_length() - 1
    a = (p >> 1) & ((1 << (s - 1)) - 1) if s > 1 else 0
    m = ", ".join(str(int(x)) for x in vinit[j][:s])
    out.write("    {%d, %d, {%s}},\n" % (s, a, m))
out.write("}};\n\n} // namespace qmcg::detail\n")
