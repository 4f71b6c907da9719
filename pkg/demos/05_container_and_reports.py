"""The binary container and the CSV report format.

Problems serialize to a little-endian container ("LIFE" magic) that round
trips bit-for-bit; kernel timings export to a fixed CSV schema that parses
back losslessly.
"""

import struct
import tempfile
from pathlib import Path

import lifespmv as L
from lifespmv import io as lio

workdir = Path(tempfile.mkdtemp())
path = workdir / "demo.life"

dims = L.Dims(n_atoms=8, n_voxels=64, n_fibers=32, n_dirs=96, n_coeffs=1024)
problem = L.generate(L.GenConfig(dims=dims, seed=5))
L.save(problem, path)

raw = path.read_bytes()
magic, version, flags = struct.unpack_from("<4sII", raw, 0)
na, nv, nf, nd, nc = struct.unpack_from("<5Q", raw, 12)
print(f"file: {path} ({len(raw)} bytes)")
print(f"magic={magic} version={version} flags={flags:#x}")
print(f"dims: atoms={na} voxels={nv} fibers={nf} dirs={nd} coeffs={nc}")

loaded = L.load(path)
second = workdir / "again.life"
L.save(loaded, second)
print("round trip bit-identical:", path.read_bytes() == second.read_bytes())

# Timing rows export to CSV with a fixed column set.
offsets = L.precompute_offsets(problem.tensor)
rows = []
for i in range(1, 4):
    y = L.zeros_signal(dims)
    stats = L.dsc_sequential(offsets, problem.dictionary, problem.w_true, y)
    rows.append(lio.ReportRow(iteration=i, op="dsc", restructure="none",
                              partition="coeff", threads=1,
                              elapsed_s=stats.elapsed,
                              skipped=stats.skipped_coefficients))
report_path = workdir / "report.csv"
lio.export_report(rows, report_path)
print("\n" + report_path.read_text())
print("parse-back equals input:", lio.read_report(report_path) == rows)
