#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fer/linalg.hpp"
#include "fer/skew.hpp"

using namespace fer;

namespace {

Mat random_skew(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    return 0.5 * (a - a.transpose());
}

void check_form(const Mat& gamma, const SkewCanonicalForm& f, double tol = 1e-10) {
    const int n = static_cast<int>(gamma.rows());
    REQUIRE(max_abs(f.rotation * f.rotation.transpose() - Mat::Identity(n, n)) < tol);
    REQUIRE(f.rotation.determinant() == Catch::Approx(1.0).margin(1e-9));
    const Mat d = canonical_matrix(f.values, f.last_sign);
    REQUIRE(max_abs(f.rotation * gamma * f.rotation.transpose() - d) < tol);
    for (int r = 0; r + 1 < f.values.size(); ++r) REQUIRE(f.values(r) >= f.values(r + 1));
}

}  // namespace

TEST_CASE("pfaffian basics") {
    Mat a = Mat::Zero(2, 2);
    a(0, 1) = 0.7;
    a(1, 0) = -0.7;
    REQUIRE(pfaffian(a) == Catch::Approx(0.7));

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Mat b = random_skew(8, rng);
        REQUIRE(pfaffian(b) * pfaffian(b) == Catch::Approx(b.determinant()).epsilon(1e-8));
    }
    // pf(Q A Q^T) = det(Q) pf(A)
    Mat b = random_skew(6, rng);
    Mat q = random_special_orthogonal(6, rng);
    REQUIRE(pfaffian(q * b * q.transpose()) == Catch::Approx(pfaffian(b)).epsilon(1e-9));
}

TEST_CASE("canonicalize zero matrix") {
    Mat z = Mat::Zero(8, 8);
    auto f = canonicalize_skew(z);
    REQUIRE(f.converged);
    REQUIRE(f.sweeps == 0);
    REQUIRE(f.values.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(max_abs(f.rotation - Mat::Identity(8, 8)) == 0.0);
}

TEST_CASE("canonicalize pre-canonical ascending input sorts descending") {
    Vec v(2);
    v << 0.3, 0.9;
    Mat d = canonical_matrix(v);
    auto f = canonicalize_skew(d);
    REQUIRE(f.converged);
    REQUIRE(f.values(0) == Catch::Approx(0.9).margin(1e-14));
    REQUIRE(f.values(1) == Catch::Approx(0.3).margin(1e-14));
    check_form(d, f, 1e-12);
}

TEST_CASE("construct-then-recover round trip") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const int nmodes = 1 + static_cast<int>(rng() % 6);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        Vec v(nmodes);
        for (int r = 0; r < nmodes; ++r) v(r) = uni(rng);
        std::sort(v.data(), v.data() + nmodes, std::greater<double>());
        Mat q = random_special_orthogonal(2 * nmodes, rng);
        Mat gamma = q * canonical_matrix(v) * q.transpose();
        auto f = canonicalize_skew(gamma);
        REQUIRE(f.converged);
        REQUIRE((f.values - v).cwiseAbs().maxCoeff() < 1e-10);
        check_form(gamma, f);
    }
}

TEST_CASE("random skew matrices, including degenerate and pure cases") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        Mat gamma = random_skew(2 * (1 + static_cast<int>(rng() % 7)), rng);
        auto f = canonicalize_skew(gamma);
        REQUIRE(f.converged);
        check_form(gamma, f, 1e-9 * std::max(1.0, max_abs(gamma)));
    }
    // occupied pure mode: negative Pfaffian forces the orientation escape
    Mat occ = Mat::Zero(2, 2);
    occ(0, 1) = -1.0;
    occ(1, 0) = 1.0;
    auto f = canonicalize_skew(occ);
    REQUIRE(f.values(0) == Catch::Approx(1.0));
    REQUIRE(f.last_sign == -1.0);
    check_form(occ, f, 1e-12);

    // degenerate values
    Vec v(4);
    v << 0.5, 0.5, 0.5, 0.0;
    Mat q = random_special_orthogonal(8, rng);
    Mat gamma = q * canonical_matrix(v) * q.transpose();
    auto g = canonicalize_skew(gamma);
    REQUIRE(g.converged);
    check_form(gamma, g);
}

TEST_CASE("non-convergence is signalled") {
    std::mt19937_64 rng(5);
    Mat gamma = random_skew(12, rng);
    SkewCanonicalOptions opts;
    opts.max_sweeps = 0;
    auto f = canonicalize_skew(gamma, opts);
    REQUIRE_FALSE(f.converged);
}

TEST_CASE("determinism") {
    std::mt19937_64 rng(99);
    Mat gamma = random_skew(16, rng);
    auto a = canonicalize_skew(gamma);
    auto b = canonicalize_skew(gamma);
    REQUIRE(max_abs(a.rotation - b.rotation) == 0.0);
    REQUIRE((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}
