"""Regenerates crates/core/tests/data/g2_oracle.txt.

Each line: cx cy cz g2 p_value counts..., counts laid out as (z*cx + x)*cy + y.
G2 and the chi-square upper tail are evaluated with mpmath at 50 digits.
"""
import random

import mpmath

mpmath.mp.dps = 50


def g2(cx, cy, cz, counts):
    total = mpmath.mpf(0)
    for z in range(cz):
        sl = counts[z * cx * cy:(z + 1) * cx * cy]
        nz = sum(sl)
        if nz == 0:
            continue
        for x in range(cx):
            row = sum(sl[x * cy:(x + 1) * cy])
            for y in range(cy):
                n = sl[x * cy + y]
                if n == 0:
                    continue
                col = sum(sl[k * cy + y] for k in range(cx))
                e = mpmath.mpf(row) * col / nz
                total += n * mpmath.log(n / e)
    return 2 * total


def main():
    rng = random.Random(424242)
    lines = []
    for _ in range(100):
        cx, cy, cz = rng.randint(2, 4), rng.randint(2, 4), rng.randint(1, 4)
        scale = rng.choice([3, 10, 40, 200])
        counts = [rng.randint(0, scale) if rng.random() > 0.1 else 0 for _ in range(cx * cy * cz)]
        stat = g2(cx, cy, cz, counts)
        dof = (cx - 1) * (cy - 1) * cz
        p = mpmath.gammainc(mpmath.mpf(dof) / 2, stat / 2, mpmath.inf, regularized=True)
        fields = [str(cx), str(cy), str(cz), mpmath.nstr(stat, 20), mpmath.nstr(p, 20)]
        lines.append(" ".join(fields + [str(c) for c in counts]))
    with open("crates/core/tests/data/g2_oracle.txt", "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
