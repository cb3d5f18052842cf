"""Reference arrays transcribed by hand, plus small helpers."""

from epda.array import STAR, DeliveryArray


def grid(text):
    """Parse ``"* 1 1; 1 * 2"`` style text into a tuple grid."""
    return tuple(
        tuple(STAR if tok == "*" else int(tok) for tok in row.split())
        for row in text.strip().split(";")
    )


def arr(text, L):
    return DeliveryArray.from_grid(grid(text), L=L)


# (3,2,3,1,2): the smallest worked EPDA
TRIANGLE = arr("* 1 1; 1 * 2; 2 2 *", L=2)
# (3,2,3,1,2) with the labels of TRIANGLE rotated; Construction I for (3, 1)
CYCLIC3 = arr("* 2 1; 1 * 2; 2 1 *", L=2)
# (4,2,4,1,4): the Construction II output for (K, Z, n) = (4, 1, 2)
K4L2 = arr("* 1 1 4; 1 * 2 2; 3 2 * 3; 4 4 3 *", L=2)
# two side-by-side copies of TRIANGLE
K6L4 = arr("* 1 1 * 1 1; 1 * 2 1 * 2; 2 2 * 2 2 *", L=4)
PDA3 = arr("* 1 3; 1 * 2; 3 2 *", L=1)
# two side-by-side copies of PDA3
K6L2 = arr("* 1 3 * 1 3; 1 * 2 1 * 2; 3 2 * 3 2 *", L=2)
# (4,3,4,1,3): Construction I for (K, Z) = (4, 1)
K4L3 = arr("* 3 2 1; 1 * 3 2; 2 1 * 3; 3 2 1 *", L=3)

# (17,3,17,2,51): Construction II for (K, Z, n) = (17, 2, 4)
K17L3 = arr(
    """
    *  1  1  1 18 18 35 35 35 45 45 30 30 30 16 16  *;
    *  *  2  2  2 19 19 36 36 36 46 46 31 31 31 17 17;
    1  *  *  3  3  3 20 20 37 37 37 47 47 32 32 32  1;
    2  2  *  *  4  4  4 21 21 38 38 38 48 48 33 33 33;
   34  3  3  *  *  5  5  5 22 22 39 39 39 49 49 34 34;
   18 18  4  4  *  *  6  6  6 23 23 40 40 40 50 50 18;
   19 19 19  5  5  *  *  7  7  7 24 24 41 41 41 51 51;
   35 20 20 20  6  6  *  *  8  8  8 25 25 42 42 42 35;
   36 36 21 21 21  7  7  *  *  9  9  9 26 26 43 43 43;
   44 37 37 22 22 22  8  8  *  * 10 10 10 27 27 44 44;
   45 45 38 38 23 23 23  9  9  *  * 11 11 11 28 28 45;
   46 46 46 39 39 24 24 24 10 10  *  * 12 12 12 29 29;
   30 47 47 47 40 40 25 25 25 11 11  *  * 13 13 13 30;
   31 31 48 48 48 41 41 26 26 26 12 12  *  * 14 14 14;
   15 32 32 49 49 49 42 42 27 27 27 13 13  *  * 15 15;
   16 16 33 33 50 50 50 43 43 28 28 28 14 14  *  * 16;
   17 17 17 34 34 51 51 51 44 44 29 29 29 15 15  *  *
    """,
    L=3,
)

REFERENCE_ARRAYS = {
    "triangle": TRIANGLE,
    "cyclic3": CYCLIC3,
    "k4l2": K4L2,
    "k6l4": K6L4,
    "pda3": PDA3,
    "k6l2": K6L2,
    "k4l3": K4L3,
    "k17l3": K17L3,
}


def relabel_equivalent(A, B):
    """True iff ``B`` is ``A`` with its integer labels renamed by a bijection."""
    if A.params != B.params:
        return False
    fwd, back = {}, {}
    for ra, rb in zip(A.grid, B.grid):
        for a, b in zip(ra, rb):
            if (a == STAR) != (b == STAR):
                return False
            if a == STAR:
                continue
            if fwd.setdefault(a, b) != b or back.setdefault(b, a) != a:
                return False
    return True
