"""Exact in-gap eigenstates of a preset versus the band-edge bound-state prediction.

For an initially excited emitter the long-time average of P_e is
sum_j |<e|j>|^4 over discrete eigenstates j; with a single bound state this is
|<e|b>|^4, to be compared with |Res|^2 from the pole of the self-energy.
"""
import argparse

import numpy as np
import scipy.sparse.linalg as sla

from crossstitch.config import load_preset
from crossstitch.dynamics import EmitterKind, SystemState, assemble_system, field_profile
from crossstitch.lattice import band_edge, flat_energy
from crossstitch.oracles import bound_state, giant_coupling_weight, small_coupling_weight


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("presets", nargs="*", default=["fig5", "fig5_giant"])
    args = parser.parse_args()
    for name in args.presets:
        cfg = load_preset(name)
        em = cfg.emitters[0]
        system = assemble_system(cfg.lattice, cfg.emitters)
        e_min, _, alpha = band_edge(cfg.lattice)
        e_f = flat_energy(cfg.lattice)
        found = {}
        # discrete states sit below the band edge and on either side of the flat band
        for sigma in (em.frequency - 0.01, e_f - 0.05, e_f + 0.05):
            vals, vecs = sla.eigsh(system.matrix.tocsc(), k=4, sigma=sigma)
            for val, vec in zip(vals, vecs.T):
                found[round(val, 9)] = (val, vec)
        e_idx = system.emitter_index(0)
        print(f"{name}: band edge {e_min:g}, flat band {e_f:g}, emitter {em.frequency:g}")
        total = 0.0
        for val, vec in sorted(found.values(), key=lambda p: p[0]):
            weight = abs(vec[e_idx]) ** 2
            # continuum states carry vanishing emitter weight
            if weight < 1e-3:
                continue
            total += weight ** 2
            pa, _ = field_profile(SystemState(vec, 0.0, system.n_cells))
            x0 = em.attach_a.cell
            d = np.arange(1, 13)
            slope = -np.polyfit(d, np.log(np.sqrt(0.5 * (pa[x0 + d] + pa[x0 - d]))), 1)[0]
            print(f"  E = {val:.6f}  |<e|j>|^2 = {weight:.5f}  |<e|j>|^4 = {weight ** 2:.5f}  decay constant {slope:.5f}")
        print(f"  long-time average of P_e from discrete states: {total:.5f}")
        w = small_coupling_weight(em.coupling) if em.kind is EmitterKind.SMALL else giant_coupling_weight(em.coupling)
        pred = bound_state(w, alpha, e_min - em.frequency)
        print(f"  band-edge pole: shift {pred.bound_shift:.6f}, |Res|^2 = {pred.steady_population:.5f}, "
              f"decay constant {1 / pred.localization_length:.5f}")


if __name__ == "__main__":
    main()
