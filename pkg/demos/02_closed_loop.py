"""
One closed-loop run of the microgrid
====================================

Wind, PV and load are drawn from a seeded realization. A FOPID drives the
diesel generator and the two storage units through random network delays, and
we score the run with the weighted frequency/control-effort cost.
"""
import numpy as np

from fopid_agc.exo import build_trace
from fopid_agc.foctrl import FoGenome
from fopid_agc.plant import PlantConfig
from fopid_agc.sim import SimConfig, integrate

trace = build_trace(seed=1, duration=300.0)
print(f"wind {trace.wind_speed.min():.1f}..{trace.wind_speed.max():.1f} m/s, "
      f"delays {trace.tau_sc_steps.min()}..{trace.tau_sc_steps.max()} steps")

plant, sim = PlantConfig(), SimConfig()
genomes = {"FOPID": FoGenome(42.468, 16.565, 1.072, 1.024, 0.316),
           "PID": FoGenome(41.726, 29.731, 0.165),
           "no control": FoGenome(0, 0, 0)}

for name, genome in genomes.items():
    res = integrate(genome, trace, plant, sim)
    print(f"{name:>10}: J={res.J:10.3f}  ISE={res.ise:9.3f}  "
          f"max|df|={np.max(np.abs(res.delta_f)):.3f} pu  stable={res.stable}")

# how the FOPID splits the correction between its three actuators
res = integrate(genomes["FOPID"], trace, plant, sim)
for name in ("p_deg", "p_fess", "p_bess"):
    p = res.powers[name]
    print(f"{name:>7}: mean {p.mean():+.4f} pu, peak {np.max(np.abs(p)):.4f} pu")
