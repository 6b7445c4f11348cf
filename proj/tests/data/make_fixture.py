"""Writes fixture_counts.tsv: three groups, two replicates, two chromosomes."""
import numpy as np

rng = np.random.default_rng(20240611)
rows = []


def emit(chrom, positions, means, skip=()):
    for group, mean in means.items():
        for rep in ("r1", "r2"):
            for j, pos in enumerate(positions):
                if (group, j) in skip:
                    continue
                reads = 1 + rng.poisson(15)
                count = rng.binomial(reads, np.clip(mean[j], 0.0, 1.0))
                rows.append((chrom, int(pos), group, rep, int(reads), int(count)))


pos1 = np.cumsum(rng.integers(20, 60, size=45)) + 10000
base1 = 0.3 + 0.1 * np.sin(np.arange(45) / 6.0)
bump = np.zeros(45)
bump[15:28] = 0.45
emit("chr1", pos1, {"A": base1, "B": base1, "C": base1 + bump}, skip={("B", 0), ("B", 1)})

# Too short once split off by the gap.
pos1b = pos1[-1] + 3000 + np.cumsum(rng.integers(20, 60, size=12))
emit("chr1", pos1b, {g: np.full(12, 0.5) for g in "ABC"})

pos2 = np.cumsum(rng.integers(15, 50, size=36)) + 5000
base2 = np.full(36, 0.7)
low = np.zeros(36)
low[8:20] = -0.4
emit("chr2", pos2, {"A": base2, "B": base2 + 0.5 * low, "C": base2 + low})

rng.shuffle(rows)
with open("fixture_counts.tsv", "w") as f:
    f.write("chrom\tpos\tgroup\trep\treads\tcount\n")
    for r in rows:
        f.write("\t".join(map(str, r)) + "\n")
