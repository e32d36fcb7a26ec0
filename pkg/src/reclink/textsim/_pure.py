"""Pure-Python string kernels: the reference backend.

The compiled extension in ``_kernels.pyx`` mirrors these functions exactly;
any behavioural change here must be made there too (the cross-backend
equivalence test will catch drift).
"""

# Consonant coding table for American Soundex. Vowels, Y, H and W are
# intentionally absent: vowels and Y reset digit adjacency, H and W are
# transparent (NARA rule).
_SOUNDEX_DIGITS = {
    "B": "1", "F": "1", "P": "1", "V": "1",
    "C": "2", "G": "2", "J": "2", "K": "2", "Q": "2", "S": "2", "X": "2", "Z": "2",
    "D": "3", "T": "3",
    "L": "4",
    "M": "5", "N": "5",
    "R": "6",
}

# FNV-1a 64-bit constants, pinned for cross-platform determinism.
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def jaro_winkler(a: str, b: str) -> float:
    """Jaro similarity with the standard Winkler prefix boost.

    Match window is floor(max(|a|,|b|)/2) - 1, transpositions count as half
    the out-of-order matches, and the prefix boost (p = 0.1, prefix capped
    at 4) applies only when the plain Jaro score exceeds 0.7.

    Both inputs empty gives 1.0; exactly one empty gives 0.0.
    """
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0

    la, lb = len(a), len(b)
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0

    a_flags = [False] * la
    b_flags = [False] * lb
    matches = 0
    for i in range(la):
        lo = i - window if i > window else 0
        hi = i + window + 1
        if hi > lb:
            hi = lb
        for j in range(lo, hi):
            if not b_flags[j] and b[j] == a[i]:
                a_flags[i] = True
                b_flags[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0

    # Out-of-order matched characters; each transposition involves two.
    k = 0
    out_of_order = 0
    for i in range(la):
        if not a_flags[i]:
            continue
        while not b_flags[k]:
            k += 1
        if a[i] != b[k]:
            out_of_order += 1
        k += 1
    transpositions = out_of_order / 2.0

    jaro = (
        matches / la + matches / lb + (matches - transpositions) / matches
    ) / 3.0

    if jaro > 0.7:
        prefix = 0
        limit = min(la, lb, 4)
        while prefix < limit and a[prefix] == b[prefix]:
            prefix += 1
        jaro += prefix * 0.1 * (1.0 - jaro)
    return jaro


def damerau_levenshtein(a: str, b: str) -> int:
    """Restricted (optimal string alignment) Damerau-Levenshtein distance.

    Insertions, deletions, substitutions and adjacent transpositions each
    cost 1; a substring may take part in at most one transposition.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    prev2 = [0] * (lb + 1)
    prev1 = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = min(
                prev1[j] + 1,        # deletion
                cur[j - 1] + 1,      # insertion
                prev1[j - 1] + cost  # substitution
            )
            if (
                i > 1 and j > 1
                and a[i - 1] == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                swap = prev2[j - 2] + 1
                if swap < best:
                    best = swap
            cur[j] = best
        prev2, prev1 = prev1, cur
    return prev1[lb]


def soundex(a: str) -> str:
    """American Soundex code: one letter plus three digits.

    NARA variant: H and W are transparent between consonants, vowels and Y
    reset digit adjacency, and the first letter's own digit participates in
    adjacency (PFISTER -> P236, ASHCRAFT -> A261). Non-alphabetic characters
    are stripped first; input with no letters yields the sentinel "0000",
    which never equals a real code.
    """
    letters = [c for c in a.upper() if "A" <= c <= "Z"]
    if not letters:
        return "0000"

    code = letters[0]
    last_digit = _SOUNDEX_DIGITS.get(letters[0])
    for c in letters[1:]:
        if c in ("H", "W"):
            continue
        digit = _SOUNDEX_DIGITS.get(c)
        if digit is None:
            last_digit = None
            continue
        if digit != last_digit:
            code += digit
            if len(code) == 4:
                return code
        last_digit = digit
    return code.ljust(4, "0")


def ngram_bucket_counts(text: str, n: int, dim: int) -> list[int]:
    """Hash character n-grams of '#'-padded text into ``dim`` count buckets.

    Each n-gram is hashed with FNV-1a 64-bit over its code points, every
    code point contributing four little-endian bytes; the bucket is the
    hash modulo ``dim``. Empty text yields all-zero counts.
    """
    counts = [0] * dim
    if not text:
        return counts
    padded = "#" + text + "#"
    total = len(padded) - n + 1
    for i in range(total):
        h = _FNV_OFFSET
        for j in range(i, i + n):
            cp = ord(padded[j])
            for shift in (0, 8, 16, 24):
                h ^= (cp >> shift) & 0xFF
                h = (h * _FNV_PRIME) & _MASK64
        counts[h % dim] += 1
    return counts
