"""
Decode time as the graph grows
==============================

Scoring every entity costs time proportional to the number of entities.
Beam search over the trie only looks at k paths per step.
"""

from kgseq.evaluation import bench_scaling, format_bench

rows = bench_scaling([300, 1000, 3000, 10000], k=5, n_queries=30)
print(format_bench(rows))

for a, b in zip(rows, rows[1:]):
    grow = b["n_entities"] / a["n_entities"]
    print(f"x{grow:.1f} entities: oracle x{b['oracle_ms'] / a['oracle_ms']:.1f}, "
          f"decoder x{b['decoder_ms'] / a['decoder_ms']:.1f}")
