#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fer/linalg.hpp"

namespace fer {

/// Quadratic nearest-neighbour fermion model on a periodic chain or square
/// lattice: per oriented bond (r,s) a hopping (a_r^+ a_s + h.c.)/2 and a
/// pairing gamma*(a_r^+ a_s^+ + h.c.)/2, plus chemical potential
/// -lambda * n_r on every site.
struct ModelSpec {
    int dimension = 1;      // 1 or 2
    int sites_per_dim = 2;  // microsites along each axis, before grouping
    int modes_per_site = 1; // P = p^dimension for grouping factor p
    double gamma = 0.0;
    double lambda = 0.0;
    bool antiperiodic = false;  // offset momentum grid by half a spacing
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Grouping factor p with p^D = modes_per_site, or -1 if there is none.
inline int grouping_factor(const ModelSpec& s) {
    if (s.dimension == 1) return s.modes_per_site >= 1 ? s.modes_per_site : -1;
    const int p = static_cast<int>(std::lround(std::sqrt(double(s.modes_per_site))));
    return p * p == s.modes_per_site ? p : -1;
}

inline void validate(const ModelSpec& s) {
    if (s.dimension != 1 && s.dimension != 2)
        throw std::invalid_argument("model dimension must be 1 or 2");
    if (!is_power_of_two(s.sites_per_dim))
        throw std::invalid_argument("sites_per_dim must be a power of two");
    const int p = grouping_factor(s);
    if (p < 1) throw std::invalid_argument("modes_per_site must be a perfect D-th power");
    if (s.sites_per_dim % p != 0 || !is_power_of_two(s.sites_per_dim / p))
        throw std::invalid_argument("grouped lattice must keep a power-of-two side");
}

inline int mode_count(const ModelSpec& s) {
    int m = s.sites_per_dim;
    if (s.dimension == 2) m *= s.sites_per_dim;
    return m;
}

/// H = (i/4) c^T A c + offset in the Majorana basis; A real antisymmetric.
struct HamiltonianMajorana {
    Mat a;
    double offset = 0.0;  // scalar from normal-ordering the lambda term
};

namespace detail {

/// Oriented nearest-neighbour bonds (r, r+e) for every positive axis
/// direction, periodic wrap included.
inline std::vector<std::pair<int, int>> oriented_bonds(const ModelSpec& s) {
    std::vector<std::pair<int, int>> bonds;
    const int n = s.sites_per_dim;
    if (s.dimension == 1) {
        for (int r = 0; r < n; ++r) bonds.emplace_back(r, (r + 1) % n);
    } else {
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const int r = y * n + x;
                bonds.emplace_back(r, y * n + (x + 1) % n);
                bonds.emplace_back(r, ((y + 1) % n) * n + x);
            }
    }
    return bonds;
}

}  // namespace detail

inline HamiltonianMajorana majorana_coefficients(const ModelSpec& s) {
    validate(s);
    const int m = mode_count(s);
    HamiltonianMajorana ham;
    ham.a = Mat::Zero(2 * m, 2 * m);
    auto add = [&](int p, int q, double val) {
        ham.a(p, q) += val;
        ham.a(q, p) -= val;
    };
    for (const auto& [r, ss] : detail::oriented_bonds(s)) {
        // t (a_r^+ a_s + h.c.) -> A[2r, 2s+1] += t, A[2s, 2r+1] += t
        add(2 * r, 2 * ss + 1, 0.5);
        add(2 * ss, 2 * r + 1, 0.5);
        // u (a_r^+ a_s^+ + h.c.) -> A[2r, 2s+1] -= u, A[2s, 2r+1] += u
        add(2 * r, 2 * ss + 1, -0.5 * s.gamma);
        add(2 * ss, 2 * r + 1, 0.5 * s.gamma);
    }
    for (int r = 0; r < m; ++r) add(2 * r, 2 * r + 1, -s.lambda);
    ham.offset = -0.5 * s.lambda * m;
    return ham;
}

/// Momentum grid along one axis.
inline std::vector<double> momentum_grid(const ModelSpec& s) {
    std::vector<double> ks(s.sites_per_dim);
    const double shift = s.antiperiodic ? 0.5 : 0.0;
    for (int n = 0; n < s.sites_per_dim; ++n)
        ks[n] = 2.0 * M_PI * (n + shift) / s.sites_per_dim;
    return ks;
}

/// Single-particle excitation energy Lambda(k) >= 0.
inline double dispersion(const ModelSpec& s, const std::vector<double>& k) {
    validate(s);
    if (static_cast<int>(k.size()) != s.dimension)
        throw std::invalid_argument("momentum dimension mismatch");
    const double step = 2.0 * M_PI / s.sites_per_dim;
    const double shift = s.antiperiodic ? 0.5 : 0.0;
    double eps = -s.lambda, delta = 0.0;
    for (double ka : k) {
        const double ratio = ka / step - shift;
        if (std::abs(ratio - std::lround(ratio)) > 1e-9)
            throw std::invalid_argument("momentum not on the discrete Brillouin zone");
        eps += std::cos(ka);
        delta += std::sin(ka);
    }
    return std::hypot(eps, s.gamma * delta);
}

/// Ground-state correlation matrix plus the zero-mode bookkeeping needed to
/// make gapless finite lattices reproducible.
struct GroundState {
    Mat gamma;
    double energy_density = 0.0;
    int zero_modes = 0;           // single-particle levels at zero within tolerance
    bool zero_modes_occupied = false;  // the convention actually applied
};

namespace detail {

struct CorrelationKernels {
    // n(d) = <a_r^+ a_{r+d}>, g(d) = <a_r a_{r+d}> indexed by displacement
    std::vector<double> n, g;
    int zero_modes = 0;
    double energy = 0.0;
};

inline CorrelationKernels momentum_kernels(const ModelSpec& s, double zero_tol = 1e-12) {
    const auto ks = momentum_grid(s);
    const int n1 = s.sites_per_dim;
    const bool occupy = s.lambda >= 0.0;
    CorrelationKernels out;

    if (s.dimension == 1) {
        std::vector<double> occ(n1), anom(n1);
        for (int i = 0; i < n1; ++i) {
            const double eps = std::cos(ks[i]) - s.lambda;
            const double del = s.gamma * std::sin(ks[i]);
            const double lam = std::hypot(eps, del);
            if (lam <= zero_tol) {
                ++out.zero_modes;
                occ[i] = occupy ? 1.0 : 0.0;
                anom[i] = 0.0;
            } else {
                occ[i] = 0.5 * (1.0 - eps / lam);
                anom[i] = del / (2.0 * lam);
            }
            out.energy += 0.5 * (eps - lam);
        }
        out.n.assign(n1, 0.0);
        out.g.assign(n1, 0.0);
        for (int d = 0; d < n1; ++d) {
            double nd = 0.0, gd = 0.0;
            for (int i = 0; i < n1; ++i) {
                nd += std::cos(ks[i] * d) * occ[i];
                gd += std::sin(ks[i] * d) * anom[i];
            }
            out.n[d] = nd / n1;
            out.g[d] = gd / n1;
        }
    } else {
        const int ns = n1 * n1;
        std::vector<double> occ(ns), anom(ns);
        for (int iy = 0; iy < n1; ++iy)
            for (int ix = 0; ix < n1; ++ix) {
                const int i = iy * n1 + ix;
                const double eps = std::cos(ks[ix]) + std::cos(ks[iy]) - s.lambda;
                const double del = s.gamma * (std::sin(ks[ix]) + std::sin(ks[iy]));
                const double lam = std::hypot(eps, del);
                if (lam <= zero_tol) {
                    ++out.zero_modes;
                    occ[i] = occupy ? 1.0 : 0.0;
                    anom[i] = 0.0;
                } else {
                    occ[i] = 0.5 * (1.0 - eps / lam);
                    anom[i] = del / (2.0 * lam);
                }
                out.energy += 0.5 * (eps - lam);
            }
        // per-axis trig tables: cos(k (dx)), sin(k (dx))
        Mat ct(n1, n1), st(n1, n1);
        for (int i = 0; i < n1; ++i)
            for (int d = 0; d < n1; ++d) {
                ct(i, d) = std::cos(ks[i] * d);
                st(i, d) = std::sin(ks[i] * d);
            }
        out.n.assign(ns, 0.0);
        out.g.assign(ns, 0.0);
        for (int dy = 0; dy < n1; ++dy)
            for (int dx = 0; dx < n1; ++dx) {
                double nd = 0.0, gd = 0.0;
                for (int iy = 0; iy < n1; ++iy)
                    for (int ix = 0; ix < n1; ++ix) {
                        const int i = iy * n1 + ix;
                        const double c = ct(ix, dx) * ct(iy, dy) - st(ix, dx) * st(iy, dy);
                        const double sn = st(ix, dx) * ct(iy, dy) + ct(ix, dx) * st(iy, dy);
                        nd += c * occ[i];
                        gd += sn * anom[i];
                    }
                out.n[dy * n1 + dx] = nd / ns;
                out.g[dy * n1 + dx] = gd / ns;
            }
    }
    return out;
}

}  // namespace detail

inline GroundState ground_state_correlation(const ModelSpec& s) {
    validate(s);
    const auto kern = detail::momentum_kernels(s);
    const int m = mode_count(s);
    const int n1 = s.sites_per_dim;
    GroundState gs;
    gs.gamma = Mat::Zero(2 * m, 2 * m);
    gs.zero_modes = kern.zero_modes;
    gs.zero_modes_occupied = s.lambda >= 0.0;
    gs.energy_density = kern.energy / m;
    // fill ordered pairs and mirror, so antisymmetry holds exactly
    for (int r = 0; r < m; ++r)
        for (int ss = r; ss < m; ++ss) {
            int d;
            if (s.dimension == 1) {
                d = ((ss - r) % n1 + n1) % n1;
            } else {
                const int dx = (((ss % n1) - (r % n1)) % n1 + n1) % n1;
                const int dy = (((ss / n1) - (r / n1)) % n1 + n1) % n1;
                d = dy * n1 + dx;
            }
            const double delta = (r == ss) ? 1.0 : 0.0;
            const double a = delta - 2.0 * kern.n[d] - 2.0 * kern.g[d];
            gs.gamma(2 * r, 2 * ss + 1) = a;
            gs.gamma(2 * ss + 1, 2 * r) = -a;
            if (ss > r) {
                const double b = -delta + 2.0 * kern.n[d] - 2.0 * kern.g[d];
                gs.gamma(2 * r + 1, 2 * ss) = b;
                gs.gamma(2 * ss, 2 * r + 1) = -b;
            }
        }
    return gs;
}

/// <H>/M as the linear functional of the correlation matrix.
inline double energy_density(const Mat& gamma, const HamiltonianMajorana& ham) {
    if (gamma.rows() != ham.a.rows())
        throw std::invalid_argument("correlation/Hamiltonian dimension mismatch");
    const double tr_ag = ham.a.cwiseProduct(Mat(gamma.transpose())).sum();
    const int m = static_cast<int>(gamma.rows()) / 2;
    return (0.25 * tr_ag + ham.offset) / m;
}

/// Closed-form momentum-space ground energy per mode.
inline double exact_gs_energy_density(const ModelSpec& s) {
    validate(s);
    const auto ks = momentum_grid(s);
    const int n1 = s.sites_per_dim;
    double e = 0.0;
    if (s.dimension == 1) {
        for (double k : ks) {
            const double eps = std::cos(k) - s.lambda;
            e += 0.5 * (eps - std::hypot(eps, s.gamma * std::sin(k)));
        }
        return e / n1;
    }
    for (double kx : ks)
        for (double ky : ks) {
            const double eps = std::cos(kx) + std::cos(ky) - s.lambda;
            const double del = s.gamma * (std::sin(kx) + std::sin(ky));
            e += 0.5 * (eps - std::hypot(eps, del));
        }
    return e / (n1 * n1);
}

}  // namespace fer
