#pragma once

// Translation-invariant fast path for 1D flows: the state of an infinite
// chain is stored as a banded kernel f(d), the 2P x 2P Majorana correlation
// block between site 0 and site d. Layers act through local patches, so the
// lattice never shrinks and the thermodynamic-limit fixed points of the RG
// are visible without wrap-around artifacts. The dense ring path is the test
// oracle for everything here.

#include <cmath>
#include <numeric>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "fer/gaussian.hpp"
#include "fer/model.hpp"
#include "fer/optimizer.hpp"

namespace fer {

struct KernelState {
    int modes_per_site = 1;
    int half_width = 0;
    std::vector<Mat> f;  // f[d + half_width], antisymmetry f(-d) = -f(d)^T

    const Mat& block(int d) const {
        if (std::abs(d) > half_width) throw std::invalid_argument("kernel separation out of range");
        return f[d + half_width];
    }
    int p2() const { return 2 * modes_per_site; }
};

namespace detail {

/// Microsite correlation kernels n(d) = <a_r^+ a_{r+d}>, g(d) = <a_r a_{r+d}>
/// of the infinite chain. Closed forms on the free-hopping line, midpoint
/// quadrature elsewhere (exponentially accurate for gapped integrands, and
/// within ~1e-9 for the kinked critical ones at this resolution).
struct MicroKernels {
    std::vector<double> n, g;  // index |d|; n even, g odd in d
};

inline MicroKernels micro_kernels_thermo(double gamma, double lambda, int width,
                                         int quadrature_points = 1 << 16) {
    MicroKernels out;
    out.n.assign(width + 1, 0.0);
    out.g.assign(width + 1, 0.0);
    if (gamma == 0.0 && std::abs(lambda) < 1.0) {
        const double kf = std::acos(lambda);  // occupied band: kf < k < 2pi - kf
        out.n[0] = 1.0 - kf / M_PI;
        for (int d = 1; d <= width; ++d) out.n[d] = -std::sin(kf * d) / (M_PI * d);
        return out;
    }
    const int nk = quadrature_points;
    std::vector<double> occ(nk), anom(nk), ks(nk);
    for (int j = 0; j < nk; ++j) {
        const double k = 2.0 * M_PI * (j + 0.5) / nk;
        const double eps = std::cos(k) - lambda;
        const double del = gamma * std::sin(k);
        const double lam = std::hypot(eps, del);
        ks[j] = k;
        occ[j] = lam > 0.0 ? 0.5 * (1.0 - eps / lam) : 0.5;
        anom[j] = lam > 0.0 ? del / (2.0 * lam) : 0.0;
    }
    // trig stepping over d, O(nk * width) without trig calls in the loop
    std::vector<double> c(nk), s(nk), ck(nk), sk(nk);
    for (int j = 0; j < nk; ++j) {
        c[j] = 1.0;
        s[j] = 0.0;
        ck[j] = std::cos(ks[j]);
        sk[j] = std::sin(ks[j]);
    }
    for (int d = 0; d <= width; ++d) {
        double nd = 0.0, gd = 0.0;
        for (int j = 0; j < nk; ++j) {
            nd += c[j] * occ[j];
            gd += s[j] * anom[j];
            const double cn = c[j] * ck[j] - s[j] * sk[j];
            s[j] = s[j] * ck[j] + c[j] * sk[j];
            c[j] = cn;
        }
        out.n[d] = nd / nk;
        out.g[d] = gd / nk;
    }
    return out;
}

inline double micro_n(const MicroKernels& mk, int d) { return mk.n[std::abs(d)]; }
inline double micro_g(const MicroKernels& mk, int d) {
    return d >= 0 ? mk.g[d] : -mk.g[-d];
}

}  // namespace detail

/// Ground-state energy per mode of the infinite chain.
inline double thermodynamic_energy_density(double gamma, double lambda,
                                           int quadrature_points = 1 << 16) {
    double e = 0.0;
    for (int j = 0; j < quadrature_points; ++j) {
        const double k = 2.0 * M_PI * (j + 0.5) / quadrature_points;
        const double eps = std::cos(k) - lambda;
        e += 0.5 * (eps - std::hypot(eps, gamma * std::sin(k)));
    }
    return e / quadrature_points;
}

/// Level-0 kernel of the model, grouped p microsites per site.
inline KernelState model_kernel(const ModelSpec& spec, int half_width) {
    if (spec.dimension != 1)
        throw std::invalid_argument("kernel representation is one-dimensional");
    const int p = spec.modes_per_site;
    const auto mk = detail::micro_kernels_thermo(spec.gamma, spec.lambda,
                                                 p * (half_width + 1) + p);
    KernelState st;
    st.modes_per_site = p;
    st.half_width = half_width;
    st.f.assign(2 * half_width + 1, Mat::Zero(2 * p, 2 * p));
    for (int d = -half_width; d <= half_width; ++d) {
        Mat& blk = st.f[d + half_width];
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) {
                const int delta = p * d + b - a;
                const double n = detail::micro_n(mk, delta);
                const double g = detail::micro_g(mk, delta);
                const double kron = delta == 0 ? 1.0 : 0.0;
                blk(2 * a, 2 * b + 1) = kron - 2.0 * n - 2.0 * g;
                blk(2 * a + 1, 2 * b) = -kron + 2.0 * n - 2.0 * g;
            }
    }
    return st;
}

/// Correlation matrix of an explicit site list (positions on the infinite
/// lattice, any order).
inline Mat assemble_sites(const KernelState& st, const std::vector<int>& sites) {
    const int p2 = st.p2();
    Mat out(p2 * sites.size(), p2 * sites.size());
    for (size_t i = 0; i < sites.size(); ++i)
        for (size_t j = 0; j < sites.size(); ++j)
            out.block(p2 * i, p2 * j, p2, p2) = st.block(sites[j] - sites[i]);
    return out;
}

struct KernelLayer {
    Mat u;
    Isometry iso;
    OptimizationTrace trace;
    Vec mixedness;
};

namespace detail {

/// Window-canonical site layout for the infinite chain: central block (0,1),
/// then disentangler partners (-1, 2), then the outer window sites (-2, 3).
inline const std::vector<int>& kernel_window_sites() {
    static const std::vector<int> sites = {0, 1, -1, 2, -2, 3};
    return sites;
}

inline WindowProblem kernel_window_problem(const KernelState& st) {
    const auto& sites = kernel_window_sites();
    std::map<int, int> local;
    for (size_t i = 0; i < sites.size(); ++i) local[sites[i]] = static_cast<int>(i);
    auto slot = [&](int left, int right) {
        std::vector<int> idx;
        for (int s : {left, right})
            for (int j = 0; j < st.modes_per_site; ++j) {
                idx.push_back(2 * (local.at(s) * st.modes_per_site + j));
                idx.push_back(2 * (local.at(s) * st.modes_per_site + j) + 1);
            }
        return idx;
    };
    return WindowProblem{assemble_sites(st, sites), {slot(-1, 0), slot(1, 2)},
                         2 * st.modes_per_site};
}

/// Conjugate the disentangler onto a patch of explicitly listed sites, then
/// rotate the listed blocks, mirroring the global ring application.
inline void conjugate_patch(Mat& patch, const std::vector<int>& sites, int modes_per_site,
                            const std::vector<std::pair<int, int>>& placements, const Mat& u,
                            const std::vector<int>& block_starts, const Mat& rot) {
    std::map<int, int> local;
    for (size_t i = 0; i < sites.size(); ++i) local[sites[i]] = static_cast<int>(i);
    auto site_maj = [&](int s) {
        std::vector<int> idx;
        for (int j = 0; j < modes_per_site; ++j) {
            idx.push_back(2 * (local.at(s) * modes_per_site + j));
            idx.push_back(2 * (local.at(s) * modes_per_site + j) + 1);
        }
        return idx;
    };
    for (const auto& [l, r] : placements) {
        auto idx = site_maj(l);
        auto right = site_maj(r);
        idx.insert(idx.end(), right.begin(), right.end());
        conjugate_on_indices(patch, idx, u);
    }
    for (int b : block_starts) {
        auto idx = site_maj(b);
        auto right = site_maj(b + 1);
        idx.insert(idx.end(), right.begin(), right.end());
        conjugate_on_indices(patch, idx, rot);
    }
}

}  // namespace detail

struct KernelStepResult {
    KernelState state;
    KernelLayer layer;
};

/// One RG level on the kernel: optimize (U, W) on the standard window, then
/// produce the coarse kernel entry-by-entry from local patches.
inline KernelStepResult kernel_rg_step(const KernelState& st, int keep,
                                       const OptimizerOptions& opts) {
    if (st.half_width < 5) throw std::invalid_argument("kernel too narrow for an RG step");
    WindowProblem prob = detail::kernel_window_problem(st);
    LayerResult lr = optimize_layer(prob, keep, opts);

    KernelStepResult out;
    out.layer = KernelLayer{lr.u, lr.iso, lr.trace, lr.mixedness};
    KernelState next;
    next.modes_per_site = keep;
    next.half_width = (st.half_width - 3) / 2;
    next.f.assign(2 * next.half_width + 1, Mat::Zero(2 * keep, 2 * keep));
    for (int d = 0; d <= next.half_width; ++d) {
        // patch covering blocks 0 and d plus disentangler reach
        std::vector<int> sites;
        for (int s : {-1, 0, 1, 2}) sites.push_back(s);
        for (int s = 2 * d - 1; s <= 2 * d + 2; ++s)
            if (s < -1 || s > 2) sites.push_back(s);
        std::vector<std::pair<int, int>> placements = {{-1, 0}, {1, 2}};
        for (const auto& pl : {std::pair{2 * d - 1, 2 * d}, {2 * d + 1, 2 * d + 2}})
            if (pl.first != -1 && pl.first != 1) placements.push_back(pl);
        Mat patch = assemble_sites(st, sites);
        detail::conjugate_patch(patch, sites, st.modes_per_site, placements, lr.u,
                                d == 0 ? std::vector<int>{0} : std::vector<int>{0, 2 * d},
                                lr.iso.rotation);
        std::map<int, int> local;
        for (size_t i = 0; i < sites.size(); ++i) local[sites[i]] = static_cast<int>(i);
        const int p2 = st.p2();
        auto kept_idx = [&](int block_site) {
            std::vector<int> idx;
            const int base = p2 * local.at(block_site);
            for (int i = 0; i < 2 * keep; ++i) idx.push_back(base + i);
            return idx;
        };
        auto rows = kept_idx(0), cols = kept_idx(2 * d);
        Mat blk(2 * keep, 2 * keep);
        for (int i = 0; i < 2 * keep; ++i)
            for (int j = 0; j < 2 * keep; ++j) blk(i, j) = patch(rows[i], cols[j]);
        next.f[d + next.half_width] = blk;
        next.f[-d + next.half_width] = -blk.transpose();
    }
    out.state = std::move(next);
    return out;
}

/// Entropy of L consecutive sites of the kernel state.
inline double kernel_block_entropy(const KernelState& st, int l_sites) {
    std::vector<int> sites(l_sites);
    std::iota(sites.begin(), sites.end(), 0);
    return block_entropy(assemble_sites(st, sites));
}

/// Max-norm distance over the common band of two kernel states.
inline double kernel_distance(const KernelState& a, const KernelState& b) {
    if (a.modes_per_site != b.modes_per_site)
        throw std::invalid_argument("kernel mode count mismatch");
    const int w = std::min(a.half_width, b.half_width);
    double worst = 0.0;
    for (int d = -w; d <= w; ++d) worst = std::max(worst, max_abs(a.block(d) - b.block(d)));
    return worst;
}

/// Site-local gauge control: conjugate every site by the same rotation.
inline KernelState gauge_transform(const KernelState& st, const Mat& g) {
    KernelState out = st;
    for (auto& blk : out.f) blk = g.transpose() * blk * g;
    return out;
}

struct KernelReport {
    int level = 0;
    double eps_max = 0.0, eps_mean = 0.0;
    double s_block = 0.0;
    double energy_err_rel = 0.0;
    double fp_distance = 0.0;
    bool converged = true;
};

struct KernelTrajectory {
    ModelSpec spec;
    int keep = 0;
    double exact_energy_density = 0.0;
    KernelState level0;
    std::vector<KernelLayer> layers;
    std::vector<KernelState> states;
    std::vector<KernelReport> reports;
};

/// Undo one layer on a kernel, returning the fine kernel on separations up to
/// fine_width. Removed modes re-enter exactly pure.
inline KernelState reverse_kernel_layer(const KernelState& coarse, const KernelLayer& layer,
                                        int fine_modes_per_site, int fine_width) {
    const int keep = layer.iso.keep;
    const int l = 2 * fine_modes_per_site;  // block mode count at the fine level
    if (static_cast<int>(layer.iso.rotation.rows()) != 2 * l)
        throw std::invalid_argument("layer/mode mismatch in kernel reverse");
    const int bmax = fine_width / 2 + 3;
    const int bmin = -3;
    if (coarse.half_width < bmax - bmin)
        throw std::invalid_argument("coarse kernel too narrow to reconstruct");

    // embed coarse blocks, pad removed modes pure
    const int nb = bmax - bmin + 1;
    Mat patch = Mat::Zero(2 * l * nb, 2 * l * nb);
    for (int b = 0; b < nb; ++b) {
        for (int b2 = 0; b2 < nb; ++b2)
            patch.block(2 * l * b, 2 * l * b2, 2 * keep, 2 * keep) =
                coarse.block((b2 + bmin) - (b + bmin));
        for (int r = keep; r < l; ++r) {
            patch(2 * l * b + 2 * r, 2 * l * b + 2 * r + 1) = 1.0;
            patch(2 * l * b + 2 * r + 1, 2 * l * b + 2 * r) = -1.0;
        }
    }
    // per-block inverse rotation, then inverse disentanglers
    std::vector<int> sites;  // fine sites of the patch
    for (int b = bmin; b <= bmax; ++b) {
        sites.push_back(2 * b);
        sites.push_back(2 * b + 1);
    }
    std::vector<std::pair<int, int>> placements;
    for (int b = bmin; b < bmax; ++b) placements.push_back({2 * b + 1, 2 * b + 2});
    std::vector<int> block_starts;
    for (int b = bmin; b <= bmax; ++b) block_starts.push_back(2 * b);
    // note order: rotations first (inverse of the forward pass), then U^T
    {
        std::map<int, int> local;
        for (size_t i = 0; i < sites.size(); ++i) local[sites[i]] = static_cast<int>(i);
        auto site_maj = [&](int s) {
            std::vector<int> idx;
            for (int j = 0; j < fine_modes_per_site; ++j) {
                idx.push_back(2 * (local.at(s) * fine_modes_per_site + j));
                idx.push_back(2 * (local.at(s) * fine_modes_per_site + j) + 1);
            }
            return idx;
        };
        Mat rt = layer.iso.rotation.transpose();
        for (int b : block_starts) {
            auto idx = site_maj(b);
            auto right = site_maj(b + 1);
            idx.insert(idx.end(), right.begin(), right.end());
            conjugate_on_indices(patch, idx, rt);
        }
        Mat ut = layer.u.transpose();
        for (const auto& [lft, rgt] : placements) {
            auto idx = site_maj(lft);
            auto right = site_maj(rgt);
            idx.insert(idx.end(), right.begin(), right.end());
            conjugate_on_indices(patch, idx, ut);
        }
    }
    KernelState fine;
    fine.modes_per_site = fine_modes_per_site;
    fine.half_width = fine_width;
    fine.f.assign(2 * fine_width + 1, Mat::Zero(2 * fine_modes_per_site, 2 * fine_modes_per_site));
    const int p2 = 2 * fine_modes_per_site;
    const int origin = -2 * bmin;  // local index of fine site 0
    for (int d = 0; d <= fine_width; ++d) {
        Mat blk = Mat::Zero(p2, p2);
        for (int i = 0; i < p2; ++i)
            for (int j = 0; j < p2; ++j)
                blk(i, j) = patch(p2 * origin + i, p2 * (origin + d) + j);
        fine.f[d + fine_width] = blk;
        fine.f[-d + fine_width] = -blk.transpose();
    }
    return fine;
}

/// Kernel reconstructed at level 0 (grouped) from level tau.
inline KernelState kernel_reconstruct(const KernelTrajectory& traj, int tau, int width0) {
    if (tau < 0 || tau > static_cast<int>(traj.layers.size()))
        throw std::invalid_argument("level out of range");
    // widths needed on the way down
    std::vector<int> widths(tau + 1);
    widths[0] = width0;
    for (int t = 1; t <= tau; ++t) widths[t] = widths[t - 1] / 2 + 7;
    KernelState cur = tau == 0 ? traj.level0 : traj.states[tau - 1];
    for (int t = tau; t >= 1; --t) {
        const int fine_p = t == 1 ? traj.level0.modes_per_site : traj.keep;
        cur = reverse_kernel_layer(cur, traj.layers[t - 1], fine_p, widths[t - 1]);
    }
    return cur;
}

/// Energy per microsite of a (possibly reconstructed) grouped kernel, using
/// the nearest-neighbour structure of the model.
inline double kernel_energy_density(const KernelState& st, double gamma, double lambda) {
    const int p = st.modes_per_site;
    double m0 = 0.0, f01 = 0.0, f10 = 0.0;
    for (int a = 0; a < p; ++a) m0 += st.block(0)(2 * a, 2 * a + 1);
    m0 /= p;
    for (int a = 0; a < p; ++a) {
        const int d = (a + 1 == p) ? 1 : 0;
        const int b = (a + 1) % p;
        f01 += st.block(d)(2 * a, 2 * b + 1);
        f10 += st.block(d)(2 * a + 1, 2 * b);
    }
    f01 /= p;
    f10 /= p;
    return 0.25 * (2.0 * lambda * m0 - (1.0 - gamma) * f01 + (1.0 + gamma) * f10) - 0.5 * lambda;
}

/// Full RG flow on the infinite-chain kernel.
inline KernelTrajectory kernel_rg_flow(const ModelSpec& spec, int levels, int keep,
                                       const OptimizerOptions& opts, int initial_width = 1024) {
    KernelTrajectory traj;
    traj.spec = spec;
    traj.keep = keep;
    traj.exact_energy_density = thermodynamic_energy_density(spec.gamma, spec.lambda);
    traj.level0 = model_kernel(spec, initial_width);
    KernelState cur = traj.level0;
    for (int tau = 1; tau <= levels; ++tau) {
        auto sr = kernel_rg_step(cur, keep, opts);
        KernelReport rep;
        rep.level = tau;
        rep.converged = sr.layer.trace.converged;
        rep.eps_max = sr.layer.mixedness.size() > 0 ? sr.layer.mixedness.maxCoeff() : 0.0;
        rep.eps_mean = sr.layer.mixedness.size() > 0 ? sr.layer.mixedness.mean() : 0.0;
        rep.s_block = kernel_block_entropy(sr.state, 2);
        rep.fp_distance = cur.modes_per_site == sr.state.modes_per_site
                              ? kernel_distance(sr.state, cur)
                              : std::numeric_limits<double>::quiet_NaN();
        traj.layers.push_back(sr.layer);
        traj.states.push_back(sr.state);
        KernelState rec = kernel_reconstruct(traj, tau, 1);
        const double e = kernel_energy_density(rec, spec.gamma, spec.lambda);
        rep.energy_err_rel = std::abs(e - traj.exact_energy_density) /
                             std::abs(traj.exact_energy_density);
        traj.reports.push_back(rep);
        cur = sr.state;
    }
    return traj;
}

/// Microsite <a_r^+ a_{r+s}> of a grouped kernel.
inline double kernel_number_correlator(const KernelState& st, int separation) {
    const int p = st.modes_per_site;
    const int a = 0, b = separation % p, d = separation / p;
    const Mat& blk = st.block(d);
    const double delta = separation == 0 ? 1.0 : 0.0;
    return 0.25 * (2.0 * delta - blk(2 * a, 2 * b + 1) + blk(2 * a + 1, 2 * b));
}

}  // namespace fer
