#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fer/dense_oracle.hpp"
#include "fer/linalg.hpp"
#include "fer/skew.hpp"

namespace fer {

/// Canonical mode spectrum of a correlation-matrix block: values descending,
/// rotation in SO(2L) with rotation * gamma * rotation^T block-diagonal (see
/// SkewCanonicalForm for the last_sign escape).
using ModeSpectrum = SkewCanonicalForm;

/// Principal submatrix on the Majorana index pairs of the selected modes,
/// preserving order.
inline Mat extract_submatrix(const Mat& gamma, const std::vector<int>& modes) {
    const int m = static_cast<int>(gamma.rows()) / 2;
    std::vector<char> seen(m, 0);
    std::vector<int> idx;
    idx.reserve(2 * modes.size());
    for (int r : modes) {
        if (r < 0 || r >= m) throw std::invalid_argument("mode index out of range");
        if (seen[r]) throw std::invalid_argument("duplicate mode index");
        seen[r] = 1;
        idx.push_back(2 * r);
        idx.push_back(2 * r + 1);
    }
    return submatrix(gamma, idx);
}

inline ModeSpectrum block_diagonalize(const Mat& gamma_block,
                                      const SkewCanonicalOptions& opts = {}) {
    require_antisymmetric(gamma_block, 1e-9);
    ModeSpectrum spec = canonicalize_skew(gamma_block, opts);
    if (!spec.converged)
        throw std::runtime_error("canonical-form sweep did not converge (tolerance " +
                                 std::to_string(opts.tol) + ", " +
                                 std::to_string(opts.max_sweeps) + " sweeps)");
    return spec;
}

/// Binary entropy in bits; exact 0 at x in {0,1}.
inline double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// S = sum_r H2((1+v_r)/2) in bits. Even in the sign of v, so orientation
/// escapes do not matter.
inline double block_entropy(const ModeSpectrum& spec) {
    double s = 0.0;
    for (int r = 0; r < spec.values.size(); ++r) s += binary_entropy(0.5 * (1.0 + spec.values(r)));
    return s;
}

inline double block_entropy(const Mat& gamma_block) {
    return block_entropy(block_diagonalize(gamma_block));
}

/// Majorana index list that orders canonical blocks most-mixed-first
/// (ascending v), i.e. the arrangement in which keeping the first P' modes
/// keeps the entangled ones.
inline std::vector<int> ascending_block_indices(int nmodes) {
    std::vector<int> idx;
    idx.reserve(2 * nmodes);
    for (int j = nmodes - 1; j >= 0; --j) {
        idx.push_back(2 * j);
        idx.push_back(2 * j + 1);
    }
    return idx;
}

struct ProjectionResult {
    Mat kept;        // canonical-frame correlation matrix of the P' most-mixed modes
    Vec mixedness;   // eps_r = 1 - v_r for each removed mode, in slot order
};

/// Keep the P' most-mixed modes of a canonicalized block, report the
/// mixedness of everything projected out. Removed modes follow the kept ones
/// in ascending-v slot order, so the purest mode lands in the last slot.
inline ProjectionResult project_out_pure(const Mat& gamma_block, const ModeSpectrum& spec,
                                         int keep) {
    const int nmodes = static_cast<int>(spec.values.size());
    if (keep < 1 || keep > nmodes) throw std::invalid_argument("keep count out of range");
    Mat canon = spec.rotation * gamma_block * spec.rotation.transpose();
    const auto asc = ascending_block_indices(nmodes);
    std::vector<int> kept_idx(asc.begin(), asc.begin() + 2 * keep);
    ProjectionResult out;
    out.kept = submatrix(canon, kept_idx);
    out.mixedness = Vec(nmodes - keep);
    for (int j = keep; j < nmodes; ++j)
        out.mixedness(j - keep) = 1.0 - spec.values(nmodes - 1 - j);
    return out;
}

/// All 2^L eigenvalues prod_r (1 +- v_r)/2 of the block's reduced density
/// matrix, computed through the canonical spectrum and independently through
/// the dense Wick construction; the two routes must agree to `check_tol`.
/// Returned sorted descending.
inline Vec many_body_oracle(const Mat& gamma_block, double check_tol = 1e-10) {
    const int nmodes = static_cast<int>(gamma_block.rows()) / 2;
    if (nmodes > 8) throw std::invalid_argument("many_body_oracle supports at most 8 modes");
    const ModeSpectrum spec = block_diagonalize(gamma_block);

    const int dim = 1 << nmodes;
    Vec eigs(dim);
    for (int mask = 0; mask < dim; ++mask) {
        double p = 1.0;
        for (int r = 0; r < nmodes; ++r) {
            const double v = spec.values(r);
            p *= (mask & (1 << r)) ? 0.5 * (1.0 - v) : 0.5 * (1.0 + v);
        }
        eigs(mask) = p;
    }
    std::sort(eigs.data(), eigs.data() + dim, std::greater<double>());

    Eigen::SelfAdjointEigenSolver<oracle::CMat> es(oracle::wick_density_matrix(gamma_block));
    Vec dense = es.eigenvalues().reverse();
    if ((dense - eigs).cwiseAbs().maxCoeff() > check_tol)
        throw std::runtime_error("spectrum and dense density-matrix routes disagree");
    return eigs;
}

/// Random correlation matrix with the given canonical values (Q D Q^T for
/// Haar-ish Q in SO(2L)). Pass v in [0,1]; v_r = 1 everywhere gives a random
/// pure Gaussian state.
inline Mat correlation_from_values(const Vec& values, std::mt19937_64& rng) {
    const int n = 2 * static_cast<int>(values.size());
    Mat q = random_special_orthogonal(n, rng);
    return q * canonical_matrix(values) * q.transpose();
}

inline Mat random_correlation_matrix(int nmodes, std::mt19937_64& rng, bool pure = false) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Vec v(nmodes);
    for (int r = 0; r < nmodes; ++r) v(r) = pure ? 1.0 : uni(rng);
    return correlation_from_values(v, rng);
}

}  // namespace fer
