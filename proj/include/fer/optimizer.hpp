#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fer/gaussian.hpp"
#include "fer/linalg.hpp"
#include "fer/skew.hpp"

namespace fer {

/// Y_{P'} mask of Eq-style block pattern: unit antisymmetric 2x2 blocks on
/// slots [first, last), zero elsewhere.
inline Mat y_mask(int nmodes, int first, int last) {
    Mat y = Mat::Zero(2 * nmodes, 2 * nmodes);
    for (int r = first; r < last; ++r) {
        y(2 * r, 2 * r + 1) = 1.0;
        y(2 * r + 1, 2 * r) = -1.0;
    }
    return y;
}

/// Half antisymmetric trace (1/2) tr(gamma * y^T): the summed purity of the
/// masked slots when gamma is in canonical frame.
inline double purity_cost(const Mat& gamma_canonical, const Mat& mask) {
    if (gamma_canonical.rows() != mask.rows())
        throw std::invalid_argument("purity_cost dimension mismatch");
    return 0.5 * gamma_canonical.cwiseProduct(mask).sum();
}

struct Isometry {
    Mat rotation;  // R in SO(2L): R^T gamma R is canonical, most-mixed-first
    int keep = 0;
};

struct Disentangler {
    Mat matrix;     // shared across all placements of the layer
    int placement = -1;  // geometric anchor; -1 for the shared layer copy
};

struct OptimizerOptions {
    int max_iters = 2000;
    double tol = 1e-12;          // stop when the cost gain per iteration drops below
    bool no_disentanglers = false;
    std::string u_update = "polar";  // "polar" (with Givens fallback) or "givens"
    // weight of the kept modes' purity in the disentangler objective. The
    // removed-mode purity alone is nearly degenerate on almost-product
    // windows, where its exact maximizers may concentrate boundary
    // entanglement into the kept modes instead of stripping it; a small kept
    // weight selects the disentangling branch among those near-ties. Set to
    // zero for the bare objective.
    double kept_purity_weight = 1e-3;
    SkewCanonicalOptions canonical{};
};

struct OptimizationTrace {
    std::vector<double> cost;  // value after each exact isometry update; non-decreasing
    int iterations = 0;
    bool converged = false;
    double max_mixedness = 0.0;
};

/// One optimization window: correlation matrix in window-canonical order
/// (central block first), window-local Majorana slots of every disentangler
/// touching the central block.
struct WindowProblem {
    Mat gamma;
    std::vector<std::vector<int>> u_slots;
    int central_modes = 0;
};

namespace detail {

/// Ascending-v rotation from a descending spectrum: rows reordered so the
/// most mixed mode comes first; any orientation escape stays on the most
/// mixed (kept) slot.
inline Mat ascending_rotation(const ModeSpectrum& spec) {
    const int n = static_cast<int>(spec.rotation.rows());
    const int nmodes = n / 2;
    Mat v(n, n);
    for (int j = 0; j < nmodes; ++j) {
        v.row(2 * j) = spec.rotation.row(2 * (nmodes - 1 - j));
        v.row(2 * j + 1) = spec.rotation.row(2 * (nmodes - 1 - j) + 1);
    }
    return v;
}

inline double removed_purity_sum(const ModeSpectrum& spec, int keep) {
    const int nmodes = static_cast<int>(spec.values.size());
    double c = 0.0;
    for (int r = 0; r < nmodes - keep; ++r) c += spec.values(r);
    return c;
}

struct WindowState {
    Mat tilde;  // Q^T gamma Q with the current disentangler on every slot
};

inline void rebuild_tilde(const WindowProblem& w, const Mat& u, WindowState& st) {
    st.tilde = w.gamma;
    for (const auto& slot : w.u_slots) conjugate_on_indices(st.tilde, slot, u);
}

/// cost(U, R) through the trace formula, using the current tilde matrix.
inline double trace_cost(const Mat& tilde, int central_dim, const Mat& k_mat) {
    return 0.5 * tilde.topLeftCorner(central_dim, central_dim).cwiseProduct(k_mat).sum();
}

}  // namespace detail

/// Exact maximizer over R of the removed-mode purity for a fixed central
/// block: canonicalize and keep the P' most mixed modes.
inline Isometry optimal_isometry_given_disentanglers(const Mat& central_block, int keep,
                                                     const SkewCanonicalOptions& opts = {}) {
    const int nmodes = static_cast<int>(central_block.rows()) / 2;
    if (keep < 1 || keep > nmodes) throw std::invalid_argument("keep count out of range");
    const ModeSpectrum spec = block_diagonalize(central_block, opts);
    return Isometry{detail::ascending_rotation(spec).transpose(), keep};
}

/// Effective-site correlation matrix: conjugate the window by the
/// disentanglers, rotate the central block by R and keep the first P' slots.
inline Mat coarse_grain_window(const WindowProblem& w, const Mat& u, const Isometry& iso) {
    detail::WindowState st;
    detail::rebuild_tilde(w, u, st);
    const int dim = 2 * w.central_modes;
    Mat canon = iso.rotation.transpose() * st.tilde.topLeftCorner(dim, dim) * iso.rotation;
    return canon.topLeftCorner(2 * iso.keep, 2 * iso.keep);
}

/// Correlation matrix of the modes projected out (complementary mask).
inline Mat removed_mode_correlation(const WindowProblem& w, const Mat& u, const Isometry& iso) {
    detail::WindowState st;
    detail::rebuild_tilde(w, u, st);
    const int dim = 2 * w.central_modes;
    const int removed = w.central_modes - iso.keep;
    Mat canon = iso.rotation.transpose() * st.tilde.topLeftCorner(dim, dim) * iso.rotation;
    return canon.bottomRightCorner(2 * removed, 2 * removed);
}

struct LayerResult {
    Mat u;
    Isometry iso;
    OptimizationTrace trace;
    Vec mixedness;  // eps_r of the removed modes, slot order
};

/// Alternating maximization of the purity of the modes to be projected out.
/// The isometry update is exact; the disentangler update linearizes the
/// quadratic cost around the current U and projects the summed environment
/// onto SO (polar factor). A Givens angle sweep guards the rare non-monotone
/// polar step.
inline LayerResult optimize_layer(const WindowProblem& w, int keep, const OptimizerOptions& opts) {
    const int wdim = static_cast<int>(w.gamma.rows());
    const int cdim = 2 * w.central_modes;
    if (cdim > wdim) throw std::invalid_argument("central block larger than window");
    if (keep < 1 || keep > w.central_modes) throw std::invalid_argument("keep count out of range");
    for (const auto& slot : w.u_slots)
        for (int i : slot)
            if (i < 0 || i >= wdim) throw std::invalid_argument("disentangler slot outside window");
    const int udim = w.u_slots.empty() ? 0 : static_cast<int>(w.u_slots.front().size());

    LayerResult res;
    res.u = Mat::Identity(udim, udim);
    detail::WindowState st;
    detail::rebuild_tilde(w, res.u, st);

    ModeSpectrum spec = block_diagonalize(st.tilde.topLeftCorner(cdim, cdim), opts.canonical);
    res.iso = Isometry{detail::ascending_rotation(spec).transpose(), keep};
    double cost = detail::removed_purity_sum(spec, keep);
    if (opts.kept_purity_weight != 0.0)
        for (int r = w.central_modes - keep; r < w.central_modes; ++r)
            cost += opts.kept_purity_weight * spec.values(r);
    res.trace.cost.push_back(cost);

    const bool optimize_u = !opts.no_disentanglers && keep < w.central_modes && udim > 0;
    // objective mask: removed modes at weight one, kept modes at the small
    // tie-breaking weight (see OptimizerOptions)
    const Mat ybar = y_mask(w.central_modes, keep, w.central_modes) +
                     opts.kept_purity_weight * y_mask(w.central_modes, 0, keep);

    // a U update must improve the cost by more than this; zero-gain moves in
    // flat directions of the purity cost would otherwise random-walk U and
    // smear entanglement across effective sites
    const double gain_floor = 1e-13 * std::max(1.0, double(w.central_modes));

    for (int it = 1; it < opts.max_iters && optimize_u; ++it) {
        // K = R Ybar R^T; cost(U) = (1/2) tr(tilde_c K)
        const Mat k_mat = res.iso.rotation * ybar * res.iso.rotation.transpose();
        const double cost_before = detail::trace_cost(st.tilde, cdim, k_mat);

        bool stepped = false;
        if (opts.u_update == "polar") {
            // environments: E_i = (gamma Q Pi)[S_i, S_i] with Pi = embed(K),
            // using gamma Q = Q tilde and the disjointness of the slots
            Mat gp = Mat::Zero(wdim, wdim);
            gp.leftCols(cdim) = st.tilde.leftCols(cdim) * k_mat;
            for (const auto& slot : w.u_slots) {
                Mat rows(static_cast<int>(slot.size()), wdim);
                for (size_t i = 0; i < slot.size(); ++i) rows.row(i) = gp.row(slot[i]);
                rows = res.u * rows;
                for (size_t i = 0; i < slot.size(); ++i) gp.row(slot[i]) = rows.row(i);
            }
            Mat env = Mat::Zero(udim, udim);
            for (const auto& slot : w.u_slots) env -= 0.5 * submatrix(gp, slot);
            Mat u_cand = polar_special_orthogonal(env);
            detail::WindowState cand;
            detail::rebuild_tilde(w, u_cand, cand);
            if (detail::trace_cost(cand.tilde, cdim, k_mat) > cost_before + gain_floor) {
                res.u = std::move(u_cand);
                st = std::move(cand);
                stepped = true;
            }
        }
        if (!stepped) {
            // one Jacobi sweep over rotation angles of U; each angle is
            // optimized exactly through a 5-point trigonometric fit
            for (int p = 0; p < udim && udim > 1; ++p)
                for (int q = p + 1; q < udim; ++q) {
                    auto eval = [&](double th) {
                        Mat g2(2, 2);
                        g2 << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
                        Mat t = st.tilde;
                        for (const auto& slot : w.u_slots)
                            conjugate_on_indices(t, {slot[p], slot[q]}, g2);
                        return detail::trace_cost(t, cdim, k_mat);
                    };
                    // exact trig polynomial a0+a1 c+b1 s+a2 c2+b2 s2
                    Eigen::Matrix<double, 5, 5> m;
                    Eigen::Matrix<double, 5, 1> y;
                    for (int j = 0; j < 5; ++j) {
                        const double th = 2.0 * M_PI * j / 5.0;
                        m.row(j) << 1.0, std::cos(th), std::sin(th), std::cos(2 * th),
                            std::sin(2 * th);
                        y(j) = eval(th);
                    }
                    Eigen::Matrix<double, 5, 1> c = m.fullPivLu().solve(y);
                    double best_th = 0.0, best_val = y(0);
                    for (int jj = 0; jj < 2048; ++jj) {
                        const double th = 2.0 * M_PI * jj / 2048.0;
                        const double val = c(0) + c(1) * std::cos(th) + c(2) * std::sin(th) +
                                           c(3) * std::cos(2 * th) + c(4) * std::sin(2 * th);
                        if (val > best_val) {
                            best_val = val;
                            best_th = th;
                        }
                    }
                    if (best_val <= y(0) + gain_floor) continue;
                    Mat g2(2, 2);
                    g2 << std::cos(best_th), -std::sin(best_th), std::sin(best_th),
                        std::cos(best_th);
                    Mat rot = Mat::Identity(udim, udim);
                    rot(p, p) = g2(0, 0);
                    rot(p, q) = g2(0, 1);
                    rot(q, p) = g2(1, 0);
                    rot(q, q) = g2(1, 1);
                    res.u = res.u * rot;
                    for (const auto& slot : w.u_slots)
                        conjugate_on_indices(st.tilde, {slot[p], slot[q]}, g2);
                }
        }
        if (max_abs(res.u * res.u.transpose() - Mat::Identity(udim, udim)) > 1e-12) {
            res.u = polar_special_orthogonal(res.u);
            detail::rebuild_tilde(w, res.u, st);
        }

        spec = block_diagonalize(st.tilde.topLeftCorner(cdim, cdim), opts.canonical);
        res.iso = Isometry{detail::ascending_rotation(spec).transpose(), keep};
        double new_cost = detail::removed_purity_sum(spec, keep);
        if (opts.kept_purity_weight != 0.0)
            for (int r = w.central_modes - keep; r < w.central_modes; ++r)
                new_cost += opts.kept_purity_weight * spec.values(r);
        res.trace.cost.push_back(new_cost);
        const double gain = new_cost - cost;
        cost = new_cost;
        if (gain < opts.tol) {
            res.trace.converged = true;
            break;
        }
    }
    if (!optimize_u) res.trace.converged = true;

    res.trace.iterations = static_cast<int>(res.trace.cost.size());
    res.mixedness = Vec(w.central_modes - keep);
    const int nmodes = w.central_modes;
    for (int j = keep; j < nmodes; ++j)
        res.mixedness(j - keep) = 1.0 - spec.values(nmodes - 1 - j);
    res.trace.max_mixedness = res.mixedness.size() > 0 ? res.mixedness.maxCoeff() : 0.0;
    return res;
}

}  // namespace fer
