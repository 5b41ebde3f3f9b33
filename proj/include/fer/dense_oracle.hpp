#pragma once

// Dense Fock-space reference implementations for small mode counts. Nothing
// here touches the canonical-form or momentum-space code paths, so these
// routines double as independent oracles in the test suites.

#include <Eigen/Dense>
#include <bit>
#include <complex>
#include <stdexcept>
#include <vector>

#include "fer/linalg.hpp"
#include "fer/model.hpp"

namespace fer::oracle {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using std::complex;

inline int fock_dim(int modes) {
    if (modes < 1 || modes > 12) throw std::invalid_argument("dense oracle supports 1..12 modes");
    return 1 << modes;
}

namespace detail {

inline int jw_sign(unsigned n, int r) {
    return std::popcount(n & ((1u << r) - 1u)) % 2 == 0 ? 1 : -1;
}

struct Op {
    int mode;
    bool dagger;
};

/// Apply a product of creation/annihilation operators (rightmost first) to a
/// basis state. Returns false when the state is annihilated.
inline bool apply_ops(const std::vector<Op>& ops, unsigned n, unsigned& out, int& sign) {
    sign = 1;
    out = n;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const unsigned bit = 1u << it->mode;
        const bool occ = (out & bit) != 0;
        if (it->dagger == occ) return false;
        sign *= jw_sign(out, it->mode);
        out ^= bit;
    }
    return true;
}

}  // namespace detail

/// Dense matrix of the model Hamiltonian in the occupation basis.
inline Mat dense_hamiltonian(const ModelSpec& spec) {
    validate(spec);
    const int m = mode_count(spec);
    const int dim = fock_dim(m);
    Mat h = Mat::Zero(dim, dim);
    using detail::Op;
    struct Term {
        std::vector<Op> ops;
        double coeff;
    };
    std::vector<Term> terms;
    const int n1 = spec.sites_per_dim;
    auto bond = [&](int r, int s) {
        terms.push_back({{Op{r, true}, Op{s, false}}, 0.5});
        terms.push_back({{Op{s, true}, Op{r, false}}, 0.5});
        terms.push_back({{Op{r, true}, Op{s, true}}, 0.5 * spec.gamma});
        terms.push_back({{Op{s, false}, Op{r, false}}, 0.5 * spec.gamma});
    };
    if (spec.dimension == 1) {
        for (int r = 0; r < n1; ++r) bond(r, (r + 1) % n1);
    } else {
        for (int y = 0; y < n1; ++y)
            for (int x = 0; x < n1; ++x) {
                bond(y * n1 + x, y * n1 + (x + 1) % n1);
                bond(y * n1 + x, ((y + 1) % n1) * n1 + x);
            }
    }
    for (int r = 0; r < m; ++r) terms.push_back({{Op{r, true}, Op{r, false}}, -spec.lambda});

    for (unsigned n = 0; n < static_cast<unsigned>(dim); ++n)
        for (const auto& t : terms) {
            unsigned out;
            int sign;
            if (detail::apply_ops(t.ops, n, out, sign)) h(out, n) += t.coeff * sign;
        }
    return h;
}

/// Ground state of a dense Hermitian Hamiltonian. Degeneracies within
/// `degeneracy_tol` are resolved deterministically by extremizing the total
/// particle number (maximal when `occupy`, minimal otherwise), matching the
/// zero-mode convention of the momentum-space path.
inline Eigen::VectorXd dense_ground_state(const Mat& h, bool occupy = true,
                                          double degeneracy_tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const auto& evals = es.eigenvalues();
    const double e0 = evals(0);
    const double scale = std::max(1.0, std::abs(e0));
    int k = 0;
    while (k < evals.size() && evals(k) <= e0 + degeneracy_tol * scale) ++k;
    if (k == 1) return es.eigenvectors().col(0);
    Mat basis = es.eigenvectors().leftCols(k);
    Eigen::VectorXd counts(h.rows());
    for (int n = 0; n < h.rows(); ++n) counts(n) = std::popcount(static_cast<unsigned>(n));
    Mat nsub = basis.transpose() * counts.asDiagonal() * basis;
    Eigen::SelfAdjointEigenSolver<Mat> ns(nsub);
    const int pick = occupy ? k - 1 : 0;
    return basis * ns.eigenvectors().col(pick);
}

/// Action of the Majorana operator with code index mu (2r: a_r + a_r^+,
/// 2r+1: -i(a_r - a_r^+)) on a basis state; the result is basis state
/// n ^ (1<<r) with the returned phase.
inline complex<double> majorana_phase(int mu, unsigned n) {
    const int r = mu / 2;
    const int sign = detail::jw_sign(n, r);
    if (mu % 2 == 0) return complex<double>(sign, 0.0);
    const bool occ = (n & (1u << r)) != 0;
    return complex<double>(0.0, -1.0) * double(sign) * (occ ? 1.0 : -1.0);
}

inline CVec apply_majorana(int mu, const CVec& psi, int modes) {
    const int dim = fock_dim(modes);
    CVec out = CVec::Zero(dim);
    const unsigned bit = 1u << (mu / 2);
    for (unsigned n = 0; n < static_cast<unsigned>(dim); ++n)
        out[n ^ bit] += majorana_phase(mu, n) * psi[n];
    return out;
}

/// Correlation matrix <c_mu c_nu> = delta + i Gamma from a pure state.
inline Mat gamma_from_state(const Eigen::VectorXd& psi_real, int modes) {
    const int dim = fock_dim(modes);
    if (psi_real.size() != dim) throw std::invalid_argument("state dimension mismatch");
    CVec psi = psi_real.cast<complex<double>>();
    std::vector<CVec> x(2 * modes);
    for (int mu = 0; mu < 2 * modes; ++mu) x[mu] = apply_majorana(mu, psi, modes);
    Mat gamma = Mat::Zero(2 * modes, 2 * modes);
    for (int mu = 0; mu < 2 * modes; ++mu)
        for (int nu = mu + 1; nu < 2 * modes; ++nu) {
            const complex<double> v = x[mu].dot(x[nu]);  // <psi| c_mu c_nu |psi>
            gamma(mu, nu) = v.imag();
            gamma(nu, mu) = -v.imag();
        }
    return gamma;
}

/// Dense Gaussian density matrix assembled from a correlation matrix through
/// Wick's theorem: rho = 2^-L sum_S <E_S^+> E_S over even Majorana monomials,
/// with <E_S> = i^{|S|/2} Pf(Gamma_S).
inline CMat wick_density_matrix(const Mat& gamma) {
    const int modes = static_cast<int>(gamma.rows()) / 2;
    const int dim = fock_dim(modes);
    const int nmaj = 2 * modes;
    CMat rho = CMat::Zero(dim, dim);

    std::vector<int> members;
    for (unsigned mask = 0; mask < (1u << nmaj); ++mask) {
        const int k = std::popcount(mask);
        if (k % 2 != 0) continue;
        members.clear();
        for (int b = 0; b < nmaj; ++b)
            if (mask & (1u << b)) members.push_back(b);
        // <E_S> via Pfaffian of the contraction submatrix
        complex<double> expval(1.0, 0.0);
        if (k > 0) {
            Mat sub(k, k);
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) sub(p, q) = gamma(members[p], members[q]);
            double pf = pfaffian(sub);
            complex<double> ipow(1.0, 0.0);
            for (int t = 0; t < k / 2; ++t) ipow *= complex<double>(0.0, 1.0);
            expval = ipow * pf;
        }
        if (std::abs(expval) < 1e-16) continue;
        // coefficient of E_S in rho: <E_S^+>/2^L = conj(<E_S>)/2^L
        const complex<double> coeff = std::conj(expval) / double(dim);
        // scatter E_S: signed-permutation action on each basis state
        unsigned flip = 0;
        for (int b : members) flip ^= 1u << (b / 2);
        for (unsigned n = 0; n < static_cast<unsigned>(dim); ++n) {
            complex<double> phase(1.0, 0.0);
            unsigned cur = n;
            for (auto it = members.rbegin(); it != members.rend(); ++it) {
                phase *= majorana_phase(*it, cur);
                cur ^= 1u << (*it / 2);
            }
            rho(n ^ flip, n) += coeff * phase;
        }
    }
    return rho;
}

/// Eigenvalues of the reduced density matrix of a mode subset, by permuting
/// the kept modes to the front (with fermionic reordering signs) and tracing
/// the rest. Valid for parity-definite states.
inline Eigen::VectorXd reduced_density_eigenvalues(const Eigen::VectorXd& psi_real, int modes,
                                                   const std::vector<int>& keep) {
    const int dim = fock_dim(modes);
    if (psi_real.size() != dim) throw std::invalid_argument("state dimension mismatch");
    std::vector<int> new_pos(modes, -1);
    int pos = 0;
    for (int r : keep) new_pos[r] = pos++;
    for (int r = 0; r < modes; ++r)
        if (new_pos[r] < 0) new_pos[r] = pos++;

    const int la = static_cast<int>(keep.size());
    const int dim_a = 1 << la, dim_b = 1 << (modes - la);
    CMat coeff = CMat::Zero(dim_a, dim_b);
    for (unsigned n = 0; n < static_cast<unsigned>(dim); ++n) {
        if (psi_real[n] == 0.0) continue;
        // relabel occupied modes; sign = parity of the sort permutation
        std::vector<int> occ;
        for (int r = 0; r < modes; ++r)
            if (n & (1u << r)) occ.push_back(new_pos[r]);
        int sign = 1;
        for (size_t i = 0; i < occ.size(); ++i)
            for (size_t j = i + 1; j < occ.size(); ++j)
                if (occ[i] > occ[j]) sign = -sign;
        unsigned nn = 0;
        for (int b : occ) nn |= 1u << b;
        coeff(nn & (dim_a - 1), nn >> la) += double(sign) * psi_real[n];
    }
    CMat rho_a = coeff * coeff.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es(rho_a);
    return es.eigenvalues();
}

}  // namespace fer::oracle
