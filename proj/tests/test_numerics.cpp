#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "calibnet/error.hpp"
#include "calibnet/matrix.hpp"
#include "calibnet/normal.hpp"
#include "calibnet/rng.hpp"

using namespace calibnet;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    return m;
}

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
    Matrix m(r, c);
    for (auto& v : m.data) v = 2.0 * rng.next_uniform() - 1.0;
    return m;
}

}  // namespace

TEST_CASE("matmul identity leaves a matrix unchanged") {
    RngStream rng(11, 0);
    Matrix a = random_matrix(4, 4, rng);
    Matrix eye(4, 4);
    for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 1.0;
    Matrix out = matmul(a, eye);
    REQUIRE(out.rows == 4);
    REQUIRE(out.cols == 4);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(out.data[i] == a.data[i]);
}

TEST_CASE("matmul 1x2 by 2x1 gives the dot product") {
    Matrix a = from_rows({{1.0, 2.0}});
    Matrix b = from_rows({{3.0}, {4.0}});
    Matrix out = matmul(a, b);
    REQUIRE(out.rows == 1);
    REQUIRE(out.cols == 1);
    CHECK(out(0, 0) == 11.0);
}

TEST_CASE("matmul shape mismatch throws a shape error") {
    Matrix a(3, 5);
    Matrix b(4, 2);
    CHECK_THROWS_AS(matmul(a, b), Error);
    try {
        matmul(a, b);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::shape);
    }
}

TEST_CASE("matmul is associative to roundoff on 4x4 chains") {
    RngStream rng(7, 0);
    Matrix a = random_matrix(4, 4, rng);
    Matrix b = random_matrix(4, 4, rng);
    Matrix c = random_matrix(4, 4, rng);
    Matrix left = matmul(matmul(a, b), c);
    Matrix right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.data.size(); ++i)
        CHECK(std::fabs(left.data[i] - right.data[i]) < 1e-10);
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
    RngStream rng(23, 0);
    for (std::size_t n : {3u, 17u, 64u, 130u}) {
        Matrix a = random_matrix(n, n + 1, rng);
        Matrix b = random_matrix(n + 1, n, rng);
        Matrix s = matmul_serial(a, b);
        Matrix p = matmul_omp(a, b);
        REQUIRE(s.data.size() == p.data.size());
        for (std::size_t i = 0; i < s.data.size(); ++i) CHECK(s.data[i] == p.data[i]);

        Vector x(n + 1);
        for (auto& v : x) v = rng.next_normal();
        Matrix w = random_matrix(n + 1, n, rng);
        Vector vs = vec_mat_serial(x, w);
        Vector vp = vec_mat_omp(x, w);
        REQUIRE(vs.size() == vp.size());
        for (std::size_t i = 0; i < vs.size(); ++i) CHECK(vs[i] == vp[i]);
    }
}

TEST_CASE("mat_vec and add_outer match hand expanded forms") {
    Matrix w = from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    Vector v{10.0, 100.0};
    Vector y = mat_vec(w, v);
    REQUIRE(y.size() == 3);
    CHECK(y[0] == 210.0);
    CHECK(y[1] == 430.0);
    CHECK(y[2] == 650.0);

    Matrix g(2, 3, 1.0);
    add_outer(Vector{2.0, 3.0}, Vector{1.0, 10.0, 100.0}, g);
    CHECK(g(0, 0) == 3.0);
    CHECK(g(0, 1) == 21.0);
    CHECK(g(0, 2) == 201.0);
    CHECK(g(1, 0) == 4.0);
    CHECK(g(1, 1) == 31.0);
    CHECK(g(1, 2) == 301.0);
}

TEST_CASE("rng streams are reproducible and distinct") {
    RngStream a(42, 0);
    RngStream b(42, 0);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, 1);
    RngStream d(43, 0);
    RngStream base(42, 0);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t r = base.next_u64();
        if (r == c.next_u64()) ++same_c;
        if (r == d.next_u64()) ++same_d;
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
}

TEST_CASE("derived streams do not collide with the parent or each other") {
    RngStream parent(9, 2);
    RngStream child0 = parent.derive(0);
    RngStream child1 = parent.derive(1);
    std::set<std::uint64_t> seen;
    RngStream p2(9, 2);
    for (int i = 0; i < 50; ++i) seen.insert(p2.next_u64());
    int hits = 0;
    for (int i = 0; i < 50; ++i) {
        if (seen.count(child0.next_u64())) ++hits;
        if (seen.count(child1.next_u64())) ++hits;
    }
    CHECK(hits == 0);

    // deriving is a pure function, it must not advance the parent
    RngStream q(9, 2);
    std::uint64_t first = RngStream(9, 2).next_u64();
    (void)q.derive(5);
    CHECK(q.next_u64() == first);
}

TEST_CASE("uniform draws stay inside their intervals") {
    RngStream rng(3, 0);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.next_uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        double o = rng.next_open_uniform();
        CHECK(o > 0.0);
        CHECK(o < 1.0);
    }
}

TEST_CASE("bernoulli retain vector honors degenerate probabilities") {
    RngStream rng(5, 0);
    Vector ones(64, 1.0), zeros(64, 0.0);
    Vector m1 = bernoulli_vector(rng, ones);
    Vector m0 = bernoulli_vector(rng, zeros);
    for (double v : m1) CHECK(v == 1.0);
    for (double v : m0) CHECK(v == 0.0);
}

TEST_CASE("bernoulli empirical mean at p=0.5 over 1e6 draws") {
    RngStream rng(17, 0);
    Vector p(1, 0.5);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += bernoulli_vector(rng, p)[0];
    double mean = sum / n;
    CHECK(std::fabs(mean - 0.5) < 0.002);
}

TEST_CASE("next_below is exact on tiny ranges") {
    RngStream rng(29, 0);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 30000; ++i) {
        std::uint64_t v = rng.next_below(3);
        REQUIRE(v < 3);
        ++counts[v];
    }
    for (int c : counts) CHECK(std::fabs(c / 30000.0 - 1.0 / 3.0) < 0.02);
}

TEST_CASE("shuffled_indices is a seeded permutation") {
    RngStream a(31, 0), b(31, 0), c(32, 0);
    auto pa = shuffled_indices(1000, a);
    auto pb = shuffled_indices(1000, b);
    auto pc = shuffled_indices(1000, c);
    CHECK(pa == pb);
    CHECK(pa != pc);
    std::set<std::size_t> seen(pa.begin(), pa.end());
    CHECK(seen.size() == 1000);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 999);
}

TEST_CASE("normal quantile matches frozen table values") {
    CHECK(std::fabs(standard_normal_quantile(0.5)) < 1e-12);
    CHECK(standard_normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(standard_normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-9));
    CHECK(standard_normal_quantile(0.75) == doctest::Approx(0.6744897501960817).epsilon(1e-9));
    CHECK(standard_normal_quantile(0.25) ==
          doctest::Approx(-0.6744897501960817).epsilon(1e-9));
}

TEST_CASE("cdf and quantile round trip over a 1000 point grid") {
    for (int i = 1; i <= 1000; ++i) {
        double q = 0.001 + (0.999 - 0.001) * (i - 1) / 999.0;
        double x = standard_normal_quantile(q);
        CHECK(std::fabs(standard_normal_cdf(x) - q) <= 1e-8);
    }
}

TEST_CASE("cdf tail values stay accurate") {
    CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    // frozen: Phi(-6) = 9.865876450376946e-10
    CHECK(standard_normal_cdf(-6.0) == doctest::Approx(9.865876450376946e-10).epsilon(1e-6));
    CHECK(standard_normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
}

TEST_CASE("quantile rejects arguments outside the open interval") {
    CHECK_THROWS_AS(standard_normal_quantile(0.0), Error);
    CHECK_THROWS_AS(standard_normal_quantile(1.0), Error);
    CHECK_THROWS_AS(standard_normal_quantile(-0.5), Error);
}

TEST_CASE("normal draws have the right first two moments") {
    RngStream rng(101, 0);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.next_normal();
        s += x;
        s2 += x * x;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("all_finite flags inf and nan") {
    Matrix m(2, 2, 1.0);
    CHECK(all_finite(m));
    m(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(all_finite(m));
    Vector v{0.0, std::nan("")};
    CHECK_FALSE(all_finite(v));
}
