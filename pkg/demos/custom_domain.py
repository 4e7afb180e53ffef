"""Smooth manufactured data on a user supplied domain read from JSON.

The step channel has one reentrant corner; the data is smooth there, so the
rate stays sixth order.
"""
from pathlib import Path

from stokes_fdm import fields as F
from stokes_fdm import geometry as geo
from stokes_fdm import postprocess as PP

DOMAIN = Path(__file__).with_name("step_channel.json")


def main(levels=range(3, 6)):
    dom = geo.load_domain(DOMAIN)
    report = PP.convergence_study(F.example1(), dom, list(levels), compute_kappa=False)
    print(report.to_markdown())
    print("velocity orders:", ["%.2f" % o for o in report.orders("u").values()])


if __name__ == "__main__":
    main()
