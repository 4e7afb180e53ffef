"""The discrete velocity ignores the pressure and the viscosity.

Solves the triply connected example once per pressure variant and nu and
compares the nodal velocities bit for bit.
"""
import numpy as np

from stokes_fdm import fields as F
from stokes_fdm import geometry as geo
from stokes_fdm import postprocess as PP


def main(level=4):
    dom = geo.triply_connected_domain()
    h = 2.0 ** -level
    ref = None
    for variant in F.PRESSURE_VARIANTS:
        for nu in (1.0, 1e-4):
            prob = F.example2(p_variant=variant, nu=nu)
            sol, *_ = PP.solve_level(dom, prob, h, compute_kappa=False)
            err = PP.linf_errors(prob, sol)["u"]
            u = np.concatenate([sol.u(1)[sol.mask], sol.u(2)[sol.mask]])
            same = ref is None or np.array_equal(u, ref)
            ref = u if ref is None else ref
            print(f"p={variant:10s} nu={nu:<7g} |u-u_h|={err:.4e} identical={same}")


if __name__ == "__main__":
    main()
