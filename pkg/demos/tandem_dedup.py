"""De-duplication and CTW on three corpora, alone and in tandem.

Run: python demos/tandem_dedup.py   (about half a minute)
"""

from netmem.compress import synthetic
from netmem.dedup import dedup_bench, planted_corpus

MB = 1 << 20
corpora = {
    "planted copies, Markov filler": planted_corpus(MB, 2 * MB, seed=0),
    "planted copies, random filler": planted_corpus(MB, 2 * MB, filler="uniform", seed=0),
    "Markov, nothing planted": synthetic("markov:3:0.95", 2 * MB, seed=1),
}
print(f"{'corpus':<32}{'DD':>8}{'CTW':>8}{'DD+CTW':>8}   bits/byte")
for name, data in corpora.items():
    r = dedup_bench(data, MB)
    print(f"{name:<32}{r.dd_bits_per_byte:8.3f}{r.codec_bits_per_byte:8.3f}{r.tandem_bits_per_byte:8.3f}")
