# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled string kernels. Semantics must match ``_pure`` exactly."""

from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, uint32_t

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325UL
cdef uint64_t FNV_PRIME = 0x100000001B3UL


cdef inline int _soundex_digit(Py_UCS4 c):
    # 0 = vowel/Y (resets adjacency), -1 = H/W (transparent)
    if c == u'B' or c == u'F' or c == u'P' or c == u'V':
        return 1
    if (c == u'C' or c == u'G' or c == u'J' or c == u'K' or c == u'Q'
            or c == u'S' or c == u'X' or c == u'Z'):
        return 2
    if c == u'D' or c == u'T':
        return 3
    if c == u'L':
        return 4
    if c == u'M' or c == u'N':
        return 5
    if c == u'R':
        return 6
    if c == u'H' or c == u'W':
        return -1
    return 0


def jaro_winkler(unicode a, unicode b):
    """Jaro-Winkler similarity; see the pure backend for the contract."""
    if a == b:
        return 1.0
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == 0 or lb == 0:
        return 0.0

    cdef Py_ssize_t window = (la if la > lb else lb) // 2 - 1
    if window < 0:
        window = 0

    cdef char* a_flags = <char*>malloc(la)
    cdef char* b_flags = <char*>malloc(lb)
    if a_flags == NULL or b_flags == NULL:
        if a_flags != NULL:
            free(a_flags)
        if b_flags != NULL:
            free(b_flags)
        raise MemoryError()

    cdef Py_ssize_t i, j, lo, hi, k
    cdef Py_ssize_t matches = 0
    cdef Py_ssize_t out_of_order = 0
    cdef Py_UCS4 ca
    cdef double transpositions, jaro
    cdef Py_ssize_t prefix, limit

    try:
        for i in range(la):
            a_flags[i] = 0
        for j in range(lb):
            b_flags[j] = 0

        for i in range(la):
            ca = a[i]
            lo = i - window if i > window else 0
            hi = i + window + 1
            if hi > lb:
                hi = lb
            for j in range(lo, hi):
                if not b_flags[j] and b[j] == ca:
                    a_flags[i] = 1
                    b_flags[j] = 1
                    matches += 1
                    break
        if matches == 0:
            return 0.0

        k = 0
        for i in range(la):
            if not a_flags[i]:
                continue
            while not b_flags[k]:
                k += 1
            if a[i] != b[k]:
                out_of_order += 1
            k += 1
    finally:
        free(a_flags)
        free(b_flags)

    transpositions = out_of_order / 2.0
    jaro = (
        <double>matches / la + <double>matches / lb
        + (matches - transpositions) / matches
    ) / 3.0

    if jaro > 0.7:
        prefix = 0
        limit = la if la < lb else lb
        if limit > 4:
            limit = 4
        while prefix < limit and a[prefix] == b[prefix]:
            prefix += 1
        jaro += prefix * 0.1 * (1.0 - jaro)
    return jaro


def damerau_levenshtein(unicode a, unicode b):
    """Restricted Damerau-Levenshtein (OSA) distance."""
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    cdef Py_ssize_t width = lb + 1
    cdef Py_ssize_t* buf = <Py_ssize_t*>malloc(3 * width * sizeof(Py_ssize_t))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t* prev2 = buf
    cdef Py_ssize_t* prev1 = buf + width
    cdef Py_ssize_t* cur = buf + 2 * width
    cdef Py_ssize_t* tmp
    cdef Py_ssize_t i, j, best, cand, result
    cdef int cost

    try:
        for j in range(width):
            prev1[j] = j
            prev2[j] = 0
        for i in range(1, la + 1):
            cur[0] = i
            for j in range(1, lb + 1):
                cost = 0 if a[i - 1] == b[j - 1] else 1
                best = prev1[j] + 1
                cand = cur[j - 1] + 1
                if cand < best:
                    best = cand
                cand = prev1[j - 1] + cost
                if cand < best:
                    best = cand
                if (i > 1 and j > 1
                        and a[i - 1] == b[j - 2]
                        and a[i - 2] == b[j - 1]):
                    cand = prev2[j - 2] + 1
                    if cand < best:
                        best = cand
                cur[j] = best
            tmp = prev2
            prev2 = prev1
            prev1 = cur
            cur = tmp
        result = prev1[lb]
    finally:
        free(buf)
    return result


def soundex(unicode a):
    """American Soundex code (NARA variant); sentinel "0000" for no letters."""
    cdef Py_UCS4 c
    cdef int digit
    cdef int last_digit = 0
    cdef bint have_first = False
    cdef Py_ssize_t out_len = 0
    cdef Py_ssize_t i
    cdef char out[4]
    cdef unicode first = u""

    for i in range(len(a)):
        c = a[i]
        if c >= u'a' and c <= u'z':
            c = <Py_UCS4>(<int>c - 32)
        if c < u'A' or c > u'Z':
            continue
        digit = _soundex_digit(c)
        if not have_first:
            first = <unicode>chr(c)
            have_first = True
            last_digit = digit if digit > 0 else 0
            continue
        if digit == -1:          # H/W: transparent
            continue
        if digit == 0:           # vowel or Y: reset adjacency
            last_digit = 0
            continue
        if digit != last_digit:
            out[out_len] = <char>(48 + digit)
            out_len += 1
            if out_len == 3:
                return first + out[:3].decode("ascii")
        last_digit = digit

    if not have_first:
        return "0000"
    while out_len < 3:
        out[out_len] = 48
        out_len += 1
    return first + out[:3].decode("ascii")


def ngram_bucket_counts(unicode text, int n, int dim):
    """Bucketed character n-gram counts; see the pure backend for the contract."""
    counts = [0] * dim
    if len(text) == 0:
        return counts
    cdef unicode padded = u"#" + text + u"#"
    cdef Py_ssize_t total = len(padded) - n + 1
    cdef Py_ssize_t i, j
    cdef int shift
    cdef uint64_t h
    cdef uint32_t cp
    cdef uint64_t udim = <uint64_t>dim

    for i in range(total):
        h = FNV_OFFSET
        for j in range(i, i + n):
            cp = <uint32_t>(<Py_UCS4>padded[j])
            for shift in range(0, 32, 8):
                h = h ^ ((cp >> shift) & 0xFF)
                h = h * FNV_PRIME
            # 64-bit wraparound is native for uint64_t
        counts[<Py_ssize_t>(h % udim)] += 1
    return counts
