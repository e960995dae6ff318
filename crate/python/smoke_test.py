#!/usr/bin/env python3
"""Smoke test for the lowreg_fem_py extension module.

Builds nothing itself: expects the cdylib at target/{release,debug}/
(`cargo build -p lowreg-fem-py [--release]`). It copies the library next to
a temp dir under the importable name and exercises the main entry points.
"""

import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    names = ["liblowreg_fem_py.so", "lowreg_fem_py.so", "liblowreg_fem_py.dylib"]
    for profile in ("release", "debug"):
        for name in names:
            candidate = ROOT / "target" / profile / name
            if candidate.exists():
                tmp = pathlib.Path(tempfile.mkdtemp())
                shutil.copy(candidate, tmp / "lowreg_fem_py.so")
                sys.path.insert(0, str(tmp))
                import lowreg_fem_py

                return lowreg_fem_py
    raise SystemExit(
        "extension not found; run `cargo build -p lowreg-fem-py` first"
    )


def approx_le(a, b, slack=1e-12):
    return a <= b + slack


def main():
    m = load_module()

    fields = dict(m.list_fields())
    assert "smooth_trig" in fields and "grad_power_line" in fields
    assert "cube" in m.list_domains()

    mesh = m.Mesh("cube", 1)
    assert mesh.dim == 3 and mesh.n_cells == 6
    fine = mesh.refine()
    assert fine.n_cells == 48
    assert fine.h_max < mesh.h_max
    assert mesh.n_dofs("nedelec0") == mesh.n_edges
    assert mesh.n_dofs("rt0") == mesh.n_faces

    const = m.Field("constant")
    assert const.eval(0.3, 0.4, 0.5) == (1.0, 1.0, 1.0)
    fe = m.interpolate(mesh, const, operator="canonical")
    assert m.l2_error(mesh, const, fe) < 1e-12

    trig = m.Field("smooth_trig")
    coarse_err = m.l2_error(mesh, trig, m.interpolate(mesh, trig, operator="quasi"))
    fine_err = m.l2_error(fine, trig, m.interpolate(fine, trig, operator="quasi"))
    assert fine_err < coarse_err

    best = m.l2_error(fine, trig, m.interpolate(fine, trig, operator="best_l2"))
    assert approx_le(best, fine_err)

    sing = m.Field("grad_power_line", lam=0.3)
    assert sing.r_star == 0.3
    lp = m.Mesh("lprism", 1)
    s = m.cell_seminorm(lp, sing, 0.25, 0, level=1)
    assert s >= 0.0
    rhs = m.bound_rhs(lp, sing, 0.25, level=1)
    assert rhs > 0.0

    sol, l2, hcurl, iters = m.solve_maxwell(fine, trig, bc="strong")
    assert 0 < l2 < hcurl and iters > 0
    sol_n, l2_n, hcurl_n, _ = m.solve_maxwell(fine, trig, bc="nitsche", eta0=10.0)
    assert hcurl_n < 3.0 * hcurl

    report = json.loads(
        m.run_study_json(
            json.dumps(
                {
                    "domain": "cube",
                    "levels": 2,
                    "operator": "quasi",
                    "field": "smooth_trig",
                    "r": 0.5,
                    "pair_level": 1,
                }
            )
        )
    )
    assert len(report["levels"]) == 2
    assert report["levels"][1]["err_l2"] < report["levels"][0]["err_l2"]

    print("smoke test passed")


if __name__ == "__main__":
    main()
