"""Independent Python model of sage::Rng, used to pin seeded test values."""
import sys

M = (1 << 64) - 1


def splitmix64_next(state):
    state = (state + 0x9E3779B97F4A7C15) & M
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return state, z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


class Rng:
    def __init__(self, seed):
        self.s = []
        st = seed
        for _ in range(4):
            st, v = splitmix64_next(st)
            self.s.append(v)

    def next(self):
        s = self.s
        result = (rotl((s[1] * 5) & M, 7) * 9) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def below(self, n):
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next()
            if r >= threshold:
                return r % n

    def shuffle(self, a):
        for i in range(len(a) - 1, 0, -1):
            j = self.below(i + 1)
            a[i], a[j] = a[j], a[i]


def fnv1a64(data, h=0xCBF29CE484222325):
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & M
    return h


def derive_seed(seed, *parts):
    h = fnv1a64(parts[0].encode())
    for p in parts[1:]:
        h = fnv1a64(p.encode(), fnv1a64(b"\x1f", h))
    return splitmix64_next(seed ^ h)[1]


def first_seed_with_perm(n, perm):
    for seed in range(1000):
        a = list(range(n))
        Rng(seed).shuffle(a)
        if a == list(perm):
            return seed


if __name__ == "__main__":
    r = Rng(42)
    print("next(42) x4:", [hex(r.next()) for _ in range(4)])
    r = Rng(42)
    print("below(10) x8:", [r.below(10) for _ in range(8)])
    print("seed perm (2,0,1):", first_seed_with_perm(3, (2, 0, 1)))
    print("seed perm (1,2,0):", first_seed_with_perm(3, (1, 2, 0)))
    print("derive_seed(42,'doc-1','random_caps'):", hex(derive_seed(42, "doc-1", "random_caps")))
    # partial Fisher-Yates selection used by random_capitalization
    for seed in (1, 2, 3):
        letters = list(range(8))
        rng = Rng(seed)
        k = 2
        for i in range(k):
            j = i + rng.below(8 - i)
            letters[i], letters[j] = letters[j], letters[i]
        chosen = sorted(letters[:k])
        print("caps abcdefgh seed", seed, "".join(c.upper() if i in chosen else c for i, c in enumerate("abcdefgh")))
