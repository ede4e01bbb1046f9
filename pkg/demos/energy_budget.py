"""
When does compression save energy?
==================================

Compressing costs CPU cycles once at the source. Sending costs radio energy
at every hop. With 90 readings squeezed into 32 code values, the CPU cost is
repaid from the first hop and the saving grows with the route length.
"""

from sensorpress.energy import cycles_compress, e_clk, s_bit, savings_report

print(f"one radio bit costs {s_bit() / e_clk():,.0f} CPU cycles")
print(f"encoding 90 readings into 32 values costs {cycles_compress(90, 32):,} cycles")

for row in savings_report(90, 32, range(1, 11)):
    print(f"hops={row.hops:2d}  raw {row.e_raw:6.3f} J  compressed {row.e_compressed:6.3f} J  "
          f"x{row.ratio:.2f}")

###############################################################################
# A code that is barely smaller than the input is not worth computing.
(row,) = savings_report(90, 89, [1])
print("K=89 worthwhile:", row.worthwhile)
