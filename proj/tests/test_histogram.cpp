#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <latsum/histogram.hpp>

using namespace latsum;

namespace {

// independent oracle: enumerate (Z/q)^n with evaluate_mod
ValueHistogram brute_histogram(const IntegerForm& f, u64 q) {
    ValueHistogram h;
    h.q = q;
    h.n = f.n();
    h.form_digest = f.digest();
    h.counts.assign(q, 0);
    std::vector<u64> t(f.n(), 0);
    while (true) {
        ++h.counts[f.evaluate_mod(t, q)];
        int j = f.n() - 1;
        while (j >= 0 && ++t[j] == q) t[j--] = 0;
        if (j < 0) break;
    }
    return h;
}

} // namespace

TEST_CASE("value histogram matches documented examples") {
    auto f = IntegerForm::parse("x1^2 + x2^2");
    auto h = value_histogram_mod(f, 2);
    CHECK(i128_str(h.counts[0]) == "2");
    CHECK(i128_str(h.counts[1]) == "2");

    auto g = IntegerForm::parse("x1^2");
    auto h4 = value_histogram_mod(g, 4);
    CHECK(i128_str(h4.counts[0]) == "2");
    CHECK(i128_str(h4.counts[1]) == "2");
    CHECK(i128_str(h4.counts[2]) == "0");
    CHECK(i128_str(h4.counts[3]) == "0");

    auto h1 = value_histogram_mod(f, 1);
    CHECK(i128_str(h1.counts[0]) == "1");
}

TEST_CASE("diagonal convolution equals brute enumeration") {
    for (const char* lit : {"x1^2+x2^2", "x1^3 - 2*x2^3", "x1^2+x2^2+x3^2"}) {
        auto f = IntegerForm::parse(lit);
        for (u64 q : {2, 3, 4, 5, 7, 8, 9, 12, 25, 27, 49}) {
            auto a = value_histogram_mod(f, q);
            auto b = brute_histogram(f, q);
            REQUIRE(a.counts.size() == b.counts.size());
            for (u64 v = 0; v < q; ++v) CHECK(a.counts[v] == b.counts[v]);
        }
    }
}

TEST_CASE("general path (non-diagonal) equals brute enumeration") {
    auto f = IntegerForm::parse("x1^2 + x1*x2 + x2^2");
    for (u64 q : {2, 3, 4, 5, 9, 16, 143}) {
        auto a = value_histogram_mod(f, q);
        auto b = brute_histogram(f, q);
        for (u64 v = 0; v < q; ++v) CHECK(a.counts[v] == b.counts[v]);
    }
    auto g = IntegerForm::parse("x1^3 + 2*x1*x2*x3 - x3^3");
    for (u64 q : {2, 3, 5, 8}) {
        auto a = value_histogram_mod(g, q);
        auto b = brute_histogram(g, q);
        for (u64 v = 0; v < q; ++v) CHECK(a.counts[v] == b.counts[v]);
    }
}

TEST_CASE("total mass is q^n") {
    auto f = IntegerForm::parse("x1^2+x2^2+x3^2+x4^2+x5^2");
    auto h = value_histogram_mod(f, 9);
    CHECK(h.total() == i128_pow(9, 5));
}

TEST_CASE("CRT multiplicativity across coprime moduli") {
    auto f = IntegerForm::parse("x1^2+x2^2+x3^2+x4^2+x5^2");
    auto pairs = std::vector<std::pair<u64, u64>>{{16, 625}, {81, 121}, {13, 27}};
    for (auto [q1, q2] : pairs) {
        auto h1 = value_histogram_mod(f, q1);
        auto h2 = value_histogram_mod(f, q2);
        auto h12 = value_histogram_mod(f, q1 * q2);
        for (u64 v = 0; v < q1 * q2; ++v)
            CHECK(h12.counts[v] == h1.counts[v % q1] * h2.counts[v % q2]);
    }
    // non-diagonal CRT
    auto g = IntegerForm::parse("x1^2 + x1*x2 + x2^2");
    auto h1 = value_histogram_mod(g, 11);
    auto h2 = value_histogram_mod(g, 13);
    auto h12 = value_histogram_mod(g, 143);
    for (u64 v = 0; v < 143; ++v) CHECK(h12.counts[v] == h1.counts[v % 11] * h2.counts[v % 13]);
}

TEST_CASE("budget rejection for large non-diagonal moduli") {
    auto g = IntegerForm::parse("x1^2 + x1*x2 + x2^2");
    HistogramOptions opt;
    opt.work_budget = 1000;
    CHECK_THROWS_AS(value_histogram_mod(g, 100, opt), BudgetExceeded);
}

TEST_CASE("disk cache round trip and corruption recovery") {
    auto dir = std::filesystem::temp_directory_path() / "latsum_cache_test";
    std::filesystem::remove_all(dir);
    HistogramCache cache(dir);
    HistogramOptions opt;
    opt.cache = &cache;

    auto f = IntegerForm::parse("x1^2+x2^2+x3^2");
    auto h = value_histogram_mod(f, 25, opt);
    auto hit = cache.load(f, 25);
    REQUIRE(hit.has_value());
    for (u64 v = 0; v < 25; ++v) CHECK(hit->counts[v] == h.counts[v]);

    // corrupt every cache entry; recomputation must still give exact counts
    for (auto& entry : std::filesystem::directory_iterator(dir)) {
        std::ofstream out(entry.path());
        out << "{ not json";
    }
    CHECK(!cache.load(f, 25).has_value());
    auto h2 = value_histogram_mod(f, 25, opt);
    for (u64 v = 0; v < 25; ++v) CHECK(h2.counts[v] == h.counts[v]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("reduced histogram sums buckets") {
    auto f = IntegerForm::parse("x1^2+x2^2");
    auto h9 = value_histogram_mod(f, 9);
    auto h3 = h9.reduced(3);
    auto d3 = value_histogram_mod(f, 3);
    // reduction rescales mass by (9/3)^n
    for (u64 v = 0; v < 3; ++v) CHECK(h3.counts[v] == d3.counts[v] * 9);
}
