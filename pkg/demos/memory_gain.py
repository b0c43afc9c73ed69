"""How much a shared memory helps a 1 kB packet, as the memory grows.

Run: python demos/memory_gain.py   (under ten seconds once compiled)
"""

from netmem.compress import measure_gain, synthetic

KB, MB = 1024, 1 << 20
corpus = synthetic("markov:3:0.95", 4 * MB + 256 * KB, seed=0)

for codec in ("lz", "ctw"):
    for m in (0, 64 * KB, 512 * KB, 4 * MB):
        rec = measure_gain(corpus, codec, KB, m, trials=30, seed=0)
        print(f"{codec:>3}  m={m // KB:>5} kB  bits/packet {rec.mean_bits_with_memory:8.1f}"
              f"  g={rec.g:.3f}")
