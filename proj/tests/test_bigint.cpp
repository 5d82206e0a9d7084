#include <doctest.h>

#include <random>

#include <latsum/bigint.hpp>
#include <latsum/rational.hpp>

using namespace latsum;

TEST_CASE("bigint basic arithmetic and printing") {
    CHECK(BigInt(0).str() == "0");
    CHECK(BigInt(-1).str() == "-1");
    CHECK(BigInt(INT64_MIN).str() == "-9223372036854775808");
    CHECK((BigInt(1000000007) * BigInt(998244353)).str() == "998244359987710471");
    CHECK(BigInt::parse("-12345678901234567890123456789").str() ==
          "-12345678901234567890123456789");
    CHECK((BigInt::parse("99999999999999999999") + BigInt(1)).str() == "100000000000000000000");
    CHECK((BigInt(5) - BigInt(7)).str() == "-2");
    CHECK(bigint_pow(BigInt(3), 40).str() == "12157665459056928801");
}

TEST_CASE("bigint agrees with __int128 on random values") {
    std::mt19937_64 rng(12345);
    for (int it = 0; it < 2000; ++it) {
        i64 a = i64(rng()) >> (rng() % 40);
        i64 b = i64(rng()) >> (rng() % 40);
        i128 aa = a, bb = b;
        CHECK(BigInt(a) + BigInt(b) == BigInt::from_i128(aa + bb));
        CHECK(BigInt(a) - BigInt(b) == BigInt::from_i128(aa - bb));
        CHECK(BigInt(a) * BigInt(b) == BigInt::from_i128(aa * bb));
        CHECK((BigInt(a) * BigInt(b)).to_i128() == aa * bb);
        CHECK(cmp(BigInt(a), BigInt(b)) == (aa < bb ? -1 : aa > bb ? 1 : 0));
        u64 q = rng() % 1000000 + 1;
        i128 m = (aa * bb) % i128(q);
        if (m < 0) m += q;
        CHECK((BigInt(a) * BigInt(b)).mod_u64(q) == u64(m));
    }
}

TEST_CASE("bigint round trips decimal strings") {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 200; ++it) {
        BigInt x(1);
        int words = int(rng() % 6) + 1;
        for (int w = 0; w < words; ++w) x = x.mul_small(rng() | 1);
        if (rng() & 1) x = -x;
        CHECK(BigInt::parse(x.str()) == x);
    }
}

TEST_CASE("i128 string round trip") {
    CHECK(i128_str(i128(0)) == "0");
    i128 big = i128(1234567890123456789ll) * 1000000000000000000ll;
    CHECK(i128_parse(i128_str(big)) == big);
    CHECK(i128_parse(i128_str(-big)) == -big);
}

TEST_CASE("rationals normalize and compare") {
    Rat128 a(2, 4), b(1, 2);
    CHECK(a == b);
    CHECK((Rat128(1, 3) + Rat128(1, 6)) == Rat128(1, 2));
    CHECK((Rat128(3, 7) * Rat128(7, 3)) == Rat128(1));
    CHECK((Rat128(1, 3) - Rat128(1, 2)) == Rat128(-1, 6));
    CHECK(Rat128(-2, -4) == Rat128(1, 2));
    CHECK(Rat128(1, -2).str() == "-1/2");
    CHECK(Rat128(1, 3) < Rat128(1, 2));
    CHECK((Rat128(1, 3) / Rat128(2, 3)) == Rat128(1, 2));
    CHECK(Rat128(7, 2).to_double() == doctest::Approx(3.5));
}
