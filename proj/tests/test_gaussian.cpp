#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fer/dense_oracle.hpp"
#include "fer/gaussian.hpp"
#include "fer/model.hpp"

using namespace fer;

TEST_CASE("extract_submatrix basics") {
    std::mt19937_64 rng(2);
    Mat gamma = random_correlation_matrix(4, rng);
    REQUIRE(max_abs(extract_submatrix(gamma, {0, 1, 2, 3}) - gamma) == 0.0);
    REQUIRE_THROWS_AS(extract_submatrix(gamma, {0, 4}), std::invalid_argument);
    REQUIRE_THROWS_AS(extract_submatrix(gamma, {1, 1}), std::invalid_argument);

    // single mode of a product state: +-1 block
    Mat prod = canonical_matrix(Vec::Ones(3));
    Mat one = extract_submatrix(prod, {1});
    REQUIRE(std::abs(std::abs(one(0, 1)) - 1.0) < 1e-12);
    REQUIRE(one(0, 1) == Catch::Approx(-one(1, 0)));
}

TEST_CASE("two contiguous modes of the critical chain match the dense reduced density") {
    ModelSpec spec;
    spec.sites_per_dim = 256;
    spec.gamma = 1.0;
    spec.lambda = 1.0;
    auto gs = ground_state_correlation(spec);
    Mat sub = extract_submatrix(gs.gamma, {100, 101});
    auto eigs = many_body_oracle(sub);  // throws if the two routes disagree
    REQUIRE(eigs.sum() == Catch::Approx(1.0).margin(1e-10));

    // same construction at dense-oracle scale
    ModelSpec small = spec;
    small.sites_per_dim = 8;
    auto gs8 = ground_state_correlation(small);
    Mat h = oracle::dense_hamiltonian(small);
    Eigen::VectorXd psi = oracle::dense_ground_state(h, true);
    auto direct = oracle::reduced_density_eigenvalues(psi, 8, {3, 4});
    auto viaspec = many_body_oracle(extract_submatrix(gs8.gamma, {3, 4}));
    Vec direct_desc = direct.reverse();
    REQUIRE((direct_desc - viaspec).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("block_diagonalize contract examples") {
    auto f0 = block_diagonalize(Mat::Zero(6, 6));
    REQUIRE(f0.values.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(max_abs(f0.rotation - Mat::Identity(6, 6)) == 0.0);

    Vec v(2);
    v << 0.3, 0.9;
    auto f = block_diagonalize(canonical_matrix(v));
    REQUIRE(f.values(0) == Catch::Approx(0.9));
    REQUIRE(f.values(1) == Catch::Approx(0.3));
    REQUIRE(f.rotation.determinant() == Catch::Approx(1.0).margin(1e-10));

    std::mt19937_64 rng(4);
    Mat gamma = random_correlation_matrix(5, rng);
    SkewCanonicalOptions opts;
    opts.max_sweeps = 0;
    REQUIRE_THROWS_AS(block_diagonalize(gamma, opts), std::runtime_error);
}

TEST_CASE("block entropy values and scaling") {
    ModeSpectrum pure;
    pure.values = Vec::Ones(4);
    REQUIRE(block_entropy(pure) == 0.0);
    ModeSpectrum mixed;
    mixed.values = Vec::Zero(1);
    REQUIRE(block_entropy(mixed) == 1.0);

    // critical Ising chain: fitted slope of S_L vs log2 L near 1/6
    ModelSpec spec;
    spec.sites_per_dim = 256;
    spec.gamma = 1.0;
    spec.lambda = 1.0;
    auto gs = ground_state_correlation(spec);
    std::vector<double> xs, ys;
    for (int l : {2, 4, 8, 16}) {
        std::vector<int> modes(l);
        std::iota(modes.begin(), modes.end(), 0);
        xs.push_back(std::log2(double(l)));
        ys.push_back(block_entropy(extract_submatrix(gs.gamma, modes)));
    }
    const int n = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    REQUIRE(std::abs(slope - 1.0 / 6.0) < 0.15 / 6.0);
}

TEST_CASE("entropy is invariant under special orthogonal conjugation") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        Mat gamma = random_correlation_matrix(4, rng);
        Mat q = random_special_orthogonal(8, rng);
        const double s0 = block_entropy(gamma);
        const double s1 = block_entropy(Mat(q * gamma * q.transpose()));
        REQUIRE(std::abs(s0 - s1) < 1e-9);
    }
}

TEST_CASE("project_out_pure") {
    std::mt19937_64 rng(12);
    Mat gamma = random_correlation_matrix(4, rng);
    auto spec = block_diagonalize(gamma);
    auto full = project_out_pure(gamma, spec, 4);
    REQUIRE(full.mixedness.size() == 0);
    auto refl = block_diagonalize(full.kept);
    REQUIRE((refl.values - spec.values).cwiseAbs().maxCoeff() < 1e-9);

    Mat prod = correlation_from_values(Vec::Ones(4), rng);
    auto pspec = block_diagonalize(prod);
    auto pr = project_out_pure(prod, pspec, 1);
    REQUIRE(pr.mixedness.cwiseAbs().maxCoeff() < 1e-12);

    Vec v(4);
    v << 0.2, 0.9, 1.0, 1.0;
    Mat known = correlation_from_values(v, rng);
    auto kspec = block_diagonalize(known);
    auto kp = project_out_pure(known, kspec, 2);
    auto kept_spec = block_diagonalize(kp.kept);
    REQUIRE(kept_spec.values(0) == Catch::Approx(0.9).margin(1e-10));
    REQUIRE(kept_spec.values(1) == Catch::Approx(0.2).margin(1e-10));
    REQUIRE(kp.mixedness.cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE_THROWS_AS(project_out_pure(known, kspec, 0), std::invalid_argument);

    for (int trial = 0; trial < 10; ++trial) {
        Mat g = random_correlation_matrix(5, rng);
        auto s = block_diagonalize(g);
        auto p = project_out_pure(g, s, 2);
        auto ks = block_diagonalize(p.kept);
        REQUIRE(ks.values.minCoeff() >= -1e-12);
        REQUIRE(ks.values.maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("many_body_oracle closed forms") {
    std::mt19937_64 rng(21);
    auto e2 = many_body_oracle(correlation_from_values(Vec::Ones(2), rng));
    REQUIRE(e2(0) == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(e2.tail(3).cwiseAbs().maxCoeff() < 1e-10);
    auto e1 = many_body_oracle(correlation_from_values(Vec::Zero(1), rng));
    REQUIRE(e1(0) == Catch::Approx(0.5).margin(1e-12));
    Vec v(1);
    v << 0.6;
    auto e06 = many_body_oracle(correlation_from_values(v, rng));
    REQUIRE(e06(0) == Catch::Approx(0.8).margin(1e-10));
    REQUIRE(e06(1) == Catch::Approx(0.2).margin(1e-10));
    REQUIRE_THROWS_AS(many_body_oracle(Mat::Zero(20, 20)), std::invalid_argument);
}

TEST_CASE("round trip: spectrum reassembles the input") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        Mat gamma = random_correlation_matrix(2 + static_cast<int>(rng() % 5), rng);
        auto spec = block_diagonalize(gamma);
        Mat d = canonical_matrix(spec.values, spec.last_sign);
        REQUIRE(max_abs(spec.rotation.transpose() * d * spec.rotation - gamma) < 1e-10);
    }
}

TEST_CASE("oracle equivalence for mixed states up to 8 modes") {
    std::mt19937_64 rng(44);
    for (int nmodes : {2, 4, 8}) {
        Mat gamma = random_correlation_matrix(nmodes, rng);
        REQUIRE_NOTHROW(many_body_oracle(gamma));  // internal 1e-10 cross-check
    }
}
