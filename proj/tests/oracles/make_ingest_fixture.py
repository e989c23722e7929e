"""Small expression / label / edge / survival fixture for the ingestion path.

20 samples x 30 genes, four subtype labels (5 each). The edge list names
two genes that are not in the expression matrix, and gene G30 has no edges.
Writes tests/fixtures/ingest/. Run from the repository root.
"""
import pathlib

import numpy as np

rng = np.random.default_rng(20240611)
out = pathlib.Path("tests/fixtures/ingest")
out.mkdir(parents=True, exist_ok=True)

genes = [f"G{i:02d}" for i in range(1, 31)]
samples = [f"TCGA-{i:02d}" for i in range(1, 21)]
labels = ["Basal", "Her2", "LumA", "LumB"] * 5
shift = {"Basal": -1.0, "Her2": -0.3, "LumA": 0.3, "LumB": 1.0}
x = rng.normal(size=(20, 30))
for r, lab in enumerate(labels):
    x[r, :10] += shift[lab]

with open(out / "expression.csv", "w") as f:
    f.write("sample_id," + ",".join(genes) + "\n")
    for s, row in zip(samples, x):
        f.write(s + "," + ",".join(f"{v:.6f}" for v in row) + "\n")
with open(out / "labels.csv", "w") as f:
    f.write("sample_id,label\n")
    for s, lab in zip(samples, labels):
        f.write(f"{s},{lab}\n")

edges = set()
for i in range(28):  # chain over G01..G29 plus random chords; G30 stays isolated
    edges.add((i, i + 1))
while len(edges) < 60:
    a, b = sorted(rng.choice(29, size=2, replace=False))
    edges.add((int(a), int(b)))
with open(out / "edges.tsv", "w") as f:
    f.write("# gene_a\tgene_b\tscore\n")
    for a, b in sorted(edges):
        f.write(f"{genes[a]}\t{genes[b]}\t{rng.uniform(0.15, 0.99):.3f}\n")
    f.write("G05\tX99\t0.800\n")
    f.write("X98\tG12\t0.700\n")

with open(out / "survival.csv", "w") as f:
    f.write("sample_id,time_days,event\n")
    for s in samples:
        f.write(f"{s},{int(rng.integers(30, 3000))},{int(rng.random() < 0.4)}\n")
