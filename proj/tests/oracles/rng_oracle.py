"""Reference values for SeededRng from a from-scratch MT19937-64.

Writes tests/fixtures/rng_golden.json. Run from the repository root.
"""
import json
import math
import pathlib

MASK = (1 << 64) - 1


class MT64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.index = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def next(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK


def mix(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


class Rng:
    def __init__(self, seed):
        self.seed = seed
        self.mt = MT64(seed)
        self.spare = None

    def uniform(self):
        return (self.mt.next() >> 11) * 2.0 ** -53

    def index(self, bound):
        threshold = ((1 << 64) - bound) % bound
        r = self.mt.next()
        while r < threshold:
            r = self.mt.next()
        return r % bound

    def normal(self):
        if self.spare is not None:
            s, self.spare = self.spare, None
            return s
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        a = 2.0 * math.pi * u2
        self.spare = r * math.sin(a)
        return r * math.cos(a)

    def derive(self, stream):
        return Rng(mix(self.seed ^ mix(stream + 1)))


def main():
    default = MT64(5489)
    for _ in range(9999):
        default.next()
    out = {"mt19937_64_default_10000th": str(default.next())}

    r = Rng(42)
    out["seed42_u64"] = [str(r.mt.next()) for _ in range(5)]
    r = Rng(42)
    out["seed42_uniform"] = [r.uniform() for _ in range(5)]
    r = Rng(7)
    out["seed7_index10"] = [r.index(10) for _ in range(20)]
    r = Rng(7)
    out["seed7_normal"] = [r.normal() for _ in range(6)]
    out["seed42_derive3_u64"] = str(Rng(42).derive(3).mt.next())
    out["mix_seed_0"] = str(mix(0))
    path = pathlib.Path("tests/fixtures/rng_golden.json")
    path.write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
