#pragma once

#include <chrono>
#include <cmath>
#include <numeric>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fer/gaussian.hpp"
#include "fer/geometry.hpp"
#include "fer/model.hpp"
#include "fer/optimizer.hpp"

namespace fer {

struct MeraLayer {
    int level = 0;           // 1-based
    BlockGeometry geometry;  // input-side lattice of this layer
    Mat u;                   // shared disentangler, one per layer
    Isometry iso;
    OptimizationTrace trace;
    Vec mixedness;
};

struct RGReport {
    int level = 0;
    double eps_max = 0.0;
    double eps_mean = 0.0;
    double s_block = 0.0;  // entropy of one RG block of the coarse lattice
    std::vector<std::pair<int, double>> entropies;  // (L sites, S_L) ladder
    double energy_density_rec = 0.0;
    double energy_err_rel = 0.0;
    double fp_distance = 0.0;  // translation-kernel distance to previous level
    double wall_seconds = 0.0;
    bool converged = true;
};

struct LevelState {
    Mat gamma;  // grouped ordering: mode = site * P + j
    int sites_per_dim = 0;
    int modes_per_site = 0;
};

struct RGTrajectory {
    ModelSpec spec;
    int keep = 0;
    double exact_energy_density = 0.0;
    LevelState level0;
    std::vector<MeraLayer> layers;
    std::vector<LevelState> states;  // after each layer
    std::vector<RGReport> reports;
};

/// Apply one layer globally: every boundary disentangler, then every block
/// isometry, then keep the first P' canonical slots of each block.
inline Mat apply_layer(const Mat& gamma, const BlockGeometry& g, const Mat& u,
                       const Isometry& iso) {
    if (gamma.rows() != 2 * g.n_modes()) throw std::invalid_argument("layer dimension mismatch");
    Mat t = gamma;
    for (int d = 0; d < g.n_disentanglers(); ++d)
        conjugate_on_indices(t, g.sites_majorana(g.disentangler_sites(d)), u);
    std::vector<int> kept;
    kept.reserve(2 * iso.keep * g.n_blocks());
    for (int b = 0; b < g.n_blocks(); ++b) {
        const auto maj = g.sites_majorana(g.block_sites(b));
        conjugate_on_indices(t, maj, iso.rotation);
        for (int i = 0; i < 2 * iso.keep; ++i) kept.push_back(maj[i]);
    }
    return submatrix(t, kept);
}

/// Inverse of apply_layer with the removed modes re-inserted as exactly pure
/// (+1 orientation). Exact round trip when nothing was truncated.
inline Mat reverse_layer(const Mat& coarse, const BlockGeometry& g, const Mat& u,
                         const Isometry& iso) {
    const int nb = g.n_blocks();
    const int l = g.block_mode_count();
    if (coarse.rows() != 2 * iso.keep * nb) throw std::invalid_argument("coarse dimension mismatch");
    Mat t = Mat::Zero(2 * g.n_modes(), 2 * g.n_modes());
    std::vector<std::vector<int>> maj(nb);
    for (int b = 0; b < nb; ++b) maj[b] = g.sites_majorana(g.block_sites(b));
    for (int b = 0; b < nb; ++b) {
        for (int b2 = 0; b2 < nb; ++b2)
            for (int i = 0; i < 2 * iso.keep; ++i)
                for (int j = 0; j < 2 * iso.keep; ++j)
                    t(maj[b][i], maj[b2][j]) = coarse(2 * iso.keep * b + i, 2 * iso.keep * b2 + j);
        for (int r = iso.keep; r < l; ++r) {
            t(maj[b][2 * r], maj[b][2 * r + 1]) = 1.0;
            t(maj[b][2 * r + 1], maj[b][2 * r]) = -1.0;
        }
    }
    for (int b = 0; b < nb; ++b) conjugate_on_indices(t, maj[b], Mat(iso.rotation.transpose()));
    for (int d = 0; d < g.n_disentanglers(); ++d)
        conjugate_on_indices(t, g.sites_majorana(g.disentangler_sites(d)), Mat(u.transpose()));
    return t;
}

struct StepResult {
    Mat gamma;
    MeraLayer layer;
};

/// Three-step RG transformation: extract the optimization window, compute
/// (U, W) by alternating purity maximization, apply the layer everywhere.
inline StepResult rg_step(const Mat& gamma, const BlockGeometry& g, int keep,
                          const OptimizerOptions& opts) {
    if (gamma.rows() != 2 * g.n_modes()) throw std::invalid_argument("lattice dimension mismatch");
    if (keep < 1 || keep > g.block_mode_count())
        throw std::invalid_argument("keep count out of range");
    const Window win = build_window(g, 0);
    WindowProblem prob{submatrix(gamma, win.majorana), win.u_slots, win.central_modes};
    LayerResult lr = optimize_layer(prob, keep, opts);
    StepResult out;
    out.layer = MeraLayer{0, g, lr.u, lr.iso, lr.trace, lr.mixedness};
    out.gamma = apply_layer(gamma, g, lr.u, lr.iso);
    return out;
}

/// Max-norm distance between correlation matrices of equal mode count.
inline double fixed_point_distance(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("mode count mismatch");
    return max_abs(a - b);
}

/// Distance between the translation kernels of two lattice states with the
/// same per-site mode count; the lattices may differ by a factor of two per
/// axis (compared over the separations of the smaller one).
inline double fixed_point_distance_kernel(const Mat& a, int sites_a, const Mat& b, int sites_b,
                                          int dimension, int modes_per_site) {
    const int p2 = 2 * modes_per_site;
    auto site_block = [&](const Mat& m, int sites, int sx, int sy) {
        const int site = dimension == 1 ? sx : sy * sites + sx;
        return m.block(0, p2 * site, p2, p2);
    };
    if (sites_a < sites_b) return fixed_point_distance_kernel(b, sites_b, a, sites_a, dimension,
                                                              modes_per_site);
    if (sites_a != sites_b && sites_a != 2 * sites_b)
        throw std::invalid_argument("incomparable lattice sizes");
    double worst = 0.0;
    const int nb = sites_b;
    auto wrap = [](int d, int n) { return ((d % n) + n) % n; };
    for (int dy = 0; dy < (dimension == 2 ? nb : 1); ++dy)
        for (int dx = 0; dx < nb; ++dx) {
            const int sx = dx <= nb / 2 ? dx : dx - nb;
            const int sy = dy <= nb / 2 ? dy : dy - nb;
            const Mat fa = site_block(a, sites_a, wrap(sx, sites_a), wrap(sy, sites_a));
            const Mat fb = site_block(b, sites_b, dx, dy);
            worst = std::max(worst, max_abs(fa - fb));
        }
    return worst;
}

inline double entropy_of_modes(const Mat& gamma, const std::vector<int>& modes) {
    return block_entropy(extract_submatrix(gamma, modes));
}

struct EntropyPoint {
    int size = 0;
    double entropy = 0.0;
};

/// S_L for contiguous blocks of L modes (1D microsite / mode ladders).
inline std::vector<EntropyPoint> entropy_scan_modes(const Mat& gamma,
                                                    const std::vector<int>& l_values) {
    const int m = static_cast<int>(gamma.rows()) / 2;
    std::vector<EntropyPoint> out;
    for (int l : l_values) {
        if (l < 1 || l > m) throw std::invalid_argument("entropy block exceeds lattice");
        std::vector<int> modes(l);
        std::iota(modes.begin(), modes.end(), 0);
        out.push_back({l, entropy_of_modes(gamma, modes)});
    }
    return out;
}

/// S_L for blocks of L consecutive sites (1D) or L x L sites (2D) on a
/// grouped-ordering lattice state.
inline std::vector<EntropyPoint> entropy_scan_sites(const LevelState& st, int dimension,
                                                    const std::vector<int>& l_values) {
    std::vector<EntropyPoint> out;
    for (int l : l_values) {
        if (l < 1 || l > st.sites_per_dim) throw std::invalid_argument("entropy block exceeds lattice");
        std::vector<int> modes;
        if (dimension == 1) {
            for (int s = 0; s < l; ++s)
                for (int j = 0; j < st.modes_per_site; ++j)
                    modes.push_back(s * st.modes_per_site + j);
        } else {
            for (int y = 0; y < l; ++y)
                for (int x = 0; x < l; ++x)
                    for (int j = 0; j < st.modes_per_site; ++j)
                        modes.push_back((y * st.sites_per_dim + x) * st.modes_per_site + j);
        }
        out.push_back({l, entropy_of_modes(st.gamma, modes)});
    }
    return out;
}

/// S_L for L x L microsite blocks of a raw (microsite-ordered) 2D state.
inline std::vector<EntropyPoint> entropy_scan_microsites_2d(const Mat& gamma, int sites_per_dim,
                                                            const std::vector<int>& l_values) {
    std::vector<EntropyPoint> out;
    for (int l : l_values) {
        if (l < 1 || l > sites_per_dim) throw std::invalid_argument("entropy block exceeds lattice");
        std::vector<int> modes;
        for (int y = 0; y < l; ++y)
            for (int x = 0; x < l; ++x) modes.push_back(y * sites_per_dim + x);
        out.push_back({l, entropy_of_modes(gamma, modes)});
    }
    return out;
}

/// Fine-lattice state reconstructed from level tau by inverting each layer
/// (grouped ordering). Exact when every removed mode was pure.
inline Mat reconstruct_gamma(const RGTrajectory& traj, int tau) {
    if (tau < 0 || tau > static_cast<int>(traj.layers.size()))
        throw std::invalid_argument("level out of range");
    Mat g = tau == 0 ? traj.level0.gamma : traj.states[tau - 1].gamma;
    for (int t = tau; t >= 1; --t)
        g = reverse_layer(g, traj.layers[t - 1].geometry, traj.layers[t - 1].u,
                          traj.layers[t - 1].iso);
    return g;
}

/// Entropy of one RG block (2 sites in 1D, 2x2 sites in 2D) of a level state.
inline double rg_block_entropy(const LevelState& st, int dimension) {
    std::vector<int> modes;
    if (dimension == 1) {
        for (int j = 0; j < 2 * st.modes_per_site; ++j) modes.push_back(j);
    } else {
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x)
                for (int j = 0; j < st.modes_per_site; ++j)
                    modes.push_back((y * st.sites_per_dim + x) * st.modes_per_site + j);
    }
    return entropy_of_modes(st.gamma, modes);
}

inline std::vector<int> inverse_permutation(const std::vector<int>& p) {
    std::vector<int> inv(p.size());
    for (size_t i = 0; i < p.size(); ++i) inv[p[i]] = static_cast<int>(i);
    return inv;
}

/// Full RG flow with per-level diagnostics.
inline RGTrajectory rg_flow(const ModelSpec& spec, int levels, int keep,
                            const OptimizerOptions& opts,
                            const std::vector<int>& entropy_ladder = {1, 2, 4}) {
    validate(spec);
    const GroundState gs = ground_state_correlation(spec);
    const HamiltonianMajorana ham = majorana_coefficients(spec);
    const auto regroup = regroup_permutation(spec);
    const auto ungroup = inverse_permutation(regroup);

    RGTrajectory traj;
    traj.spec = spec;
    traj.keep = keep;
    traj.exact_energy_density = gs.energy_density;
    const int p = grouping_factor(spec);
    traj.level0 = {apply_mode_permutation(gs.gamma, regroup), spec.sites_per_dim / p,
                   spec.modes_per_site};

    LevelState cur = traj.level0;
    for (int tau = 1; tau <= levels; ++tau) {
        const auto t0 = std::chrono::steady_clock::now();
        BlockGeometry g = build_geometry(spec.dimension, cur.sites_per_dim, cur.modes_per_site);
        StepResult sr = rg_step(cur.gamma, g, keep, opts);
        sr.layer.level = tau;

        LevelState next{std::move(sr.gamma), cur.sites_per_dim / 2, keep};
        RGReport rep;
        rep.level = tau;
        rep.converged = sr.layer.trace.converged;
        rep.eps_max = sr.layer.mixedness.size() > 0 ? sr.layer.mixedness.maxCoeff() : 0.0;
        rep.eps_mean = sr.layer.mixedness.size() > 0 ? sr.layer.mixedness.mean() : 0.0;
        rep.s_block = rg_block_entropy(next, spec.dimension);
        for (int l : entropy_ladder)
            if (l <= next.sites_per_dim / 2 && l >= 1)
                rep.entropies.push_back({l, entropy_scan_sites(next, spec.dimension, {l})[0].entropy});
        if (cur.modes_per_site == next.modes_per_site)
            rep.fp_distance = fixed_point_distance_kernel(
                next.gamma, next.sites_per_dim, cur.gamma, cur.sites_per_dim, spec.dimension,
                next.modes_per_site);
        else
            rep.fp_distance = std::numeric_limits<double>::quiet_NaN();

        traj.layers.push_back(std::move(sr.layer));
        traj.states.push_back(next);
        Mat rec = reconstruct_gamma(traj, tau);
        rep.energy_density_rec = energy_density(apply_mode_permutation(rec, ungroup), ham);
        rep.energy_err_rel = std::abs(rep.energy_density_rec - gs.energy_density) /
                             std::abs(gs.energy_density);
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                               .count();
        traj.reports.push_back(std::move(rep));
        cur = std::move(next);
    }
    return traj;
}

struct CorrelatorRow {
    int r = 0, s = 0;
    double exact = 0.0, reconstructed = 0.0, rel_err = 0.0;
};

/// <a_r^+ a_s> from a microsite-ordered correlation matrix.
inline double number_correlator(const Mat& gamma, int r, int s) {
    const double delta = r == s ? 1.0 : 0.0;
    return 0.25 * (2.0 * delta - gamma(2 * r, 2 * s + 1) + gamma(2 * r + 1, 2 * s));
}

/// <a_r a_s> from a microsite-ordered correlation matrix.
inline double pairing_correlator(const Mat& gamma, int r, int s) {
    return 0.25 * (-gamma(2 * r, 2 * s + 1) - gamma(2 * r + 1, 2 * s));
}

inline std::vector<CorrelatorRow> reconstruct_correlators(
    const RGTrajectory& traj, int tau, const std::vector<std::pair<int, int>>& pairs) {
    const auto ungroup = inverse_permutation(regroup_permutation(traj.spec));
    const Mat exact = apply_mode_permutation(traj.level0.gamma, ungroup);
    const Mat rec = apply_mode_permutation(reconstruct_gamma(traj, tau), ungroup);
    const int m = static_cast<int>(exact.rows()) / 2;
    std::vector<CorrelatorRow> rows;
    for (const auto& [r, s] : pairs) {
        if (r < 0 || r >= m || s < 0 || s >= m)
            throw std::invalid_argument("correlator pair outside lattice");
        CorrelatorRow row;
        row.r = r;
        row.s = s;
        row.exact = number_correlator(exact, r, s);
        row.reconstructed = number_correlator(rec, r, s);
        row.rel_err = std::abs(row.reconstructed - row.exact) / std::abs(row.exact);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fer
