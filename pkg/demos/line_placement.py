"""Where to put one or more memories on a line, and what they buy.

Run: python demos/line_placement.py
"""

from netmem.experiments import line_curves, line_multi

n = 10_000
print("one memory")
for row in line_curves([1.0, 2.0, 3.0, 10.0, 1e6], n).sorted_rows():
    print(f"  g={row['g']:>9g}  t/N={row['t_opt_over_N']:.4f}  tau/N={row['tau_opt_over_N']:.4f}"
          f"  G={row['G_opt']:.4f}  closed form {row['G_closed']:.4f}")

print("evenly spaced memories")
for row in line_multi([1, 2, 4, 8], [3.0, 1e6], n).sorted_rows():
    print(f"  M={row['M']}  g={row['g']:>9g}  G={row['G_sim']:.4f}  continuum {row['G_continuum']:.4f}")
