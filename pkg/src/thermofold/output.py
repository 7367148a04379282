"""Columnar text outputs: frame logs, calibration tables, manifests.

Everything written here is deterministic: fixed column orders, fixed float
formatting, no timestamps or durations.
"""

import json
import os

import numpy as np


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return "nan"
    return format(float(x), ".10g")


def ensure_outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_manifest(outdir, payload: dict):
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_summary(outdir, result, model) -> str:
    circuits = sorted(model.heating)
    crease_ids = [c.id for c in model.creases]
    header = (["increment"]
              + [f"power_{cid}_W" for cid in circuits]
              + [col for cid in crease_ids
                 for col in (f"crease{cid}_dT_K", f"crease{cid}_theta0_rad",
                             f"crease{cid}_dihedral_rad", f"crease{cid}_fold_deg")]
              + ["U_bar_J", "U_spr_J", "U_contact_J", "newton_iters", "max_T_K"])
    rows = []
    for fr in result.frames:
        row = [fr.index] + [fr.powers.get(cid, 0.0) for cid in circuits]
        for cid in crease_ids:
            row += [fr.crease_dT[cid], fr.crease_theta0[cid],
                    fr.crease_dihedral[cid],
                    np.degrees(fr.crease_dihedral[cid] - np.pi)]
        row += [fr.energies["U_bar"], fr.energies["U_spr"],
                fr.energies["U_contact"], fr.newton_iterations,
                fr.max_temperature]
        rows.append(row)
    return write_csv(os.path.join(outdir, "summary.csv"), header, rows)


def write_frame_geometry(outdir, frame) -> str:
    header = ["node", "x_m", "y_m", "z_m", "T_K"]
    n_struct = len(frame.temperatures)
    rows = []
    for i, (x, y, z) in enumerate(frame.coords):
        T = frame.temperatures[i] if i < n_struct else float("nan")
        rows.append([i, x, y, z, T])
    return write_csv(os.path.join(outdir, f"frame_{frame.index}.csv"),
                     header, rows)


def write_frame_obj(outdir, frame, mesh) -> str:
    path = os.path.join(outdir, f"frame_{frame.index}.obj")
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in frame.coords:
            fh.write(f"v {fmt(x)} {fmt(y)} {fmt(z)}\n")
        for tri in mesh.triangles:
            fh.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")
    return path


def write_thermal_diagnostics(outdir, entries) -> str:
    header = ["increment", "n_unknowns", "nnz", "capped_triangles",
              "floored_sides", "negative_clamped"]
    rows = [[e["increment"], e["n_unknowns"], e["nnz"], e["capped_triangles"],
             e["floored_sides"], e["negative_clamped"]] for e in entries]
    return write_csv(os.path.join(outdir, "thermal_diagnostics.csv"), header, rows)


def write_optimization_trace(outdir, trace) -> str:
    header = ["step", "W_m", "L1_m", "L2_m", "La_m", "power_W",
              "max_T_K", "feasible", "accepted", "note"]
    rows = []
    for s in trace.steps:
        rows.append([s.step, s.design.W, s.design.L1, s.design.L2, s.design.La,
                     s.objective, s.max_temperature, s.feasible, s.accepted,
                     s.note.replace(",", ";")])
    return write_csv(os.path.join(outdir, "trace.csv"), header, rows)
