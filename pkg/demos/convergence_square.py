"""Sixth-order convergence on the square with smooth manufactured data.

Prints the error table for three viscosities; the velocity error does not
depend on nu, the condition estimate grows by about 16 per halving of h.
"""
from stokes_fdm import fields as F
from stokes_fdm import geometry as geo
from stokes_fdm import postprocess as PP


def main(levels=range(2, 6)):
    report = PP.convergence_study(F.example1(), geo.square_domain(), list(levels), nus=[1.0, 1e-3, 1e-6])
    print(report.to_markdown())
    print("velocity orders:", ["%.2f" % o for o in report.orders("u").values()])
    print("kappa ratios:", ["%.1f" % k for k in report.kappa_ratios().values()])


if __name__ == "__main__":
    main()
