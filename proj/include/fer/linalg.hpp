#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <vector>

namespace fer {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Largest deviation from antisymmetry, |A + A^T|_max.
inline double antisymmetry_defect(const Mat& a) { return max_abs(a + a.transpose()); }

inline void require_antisymmetric(const Mat& a, double tol = 1e-10) {
    if (a.rows() != a.cols() || a.rows() % 2 != 0)
        throw std::invalid_argument("expected even-dimensional square matrix");
    if (antisymmetry_defect(a) > tol) throw std::invalid_argument("matrix is not antisymmetric");
}

/// In-place conjugation gamma <- Q^T gamma Q where Q is the identity except
/// for the square block `u` embedded at positions `idx`. Touches only the
/// listed rows/columns; O(n^2 * |idx|).
inline void conjugate_on_indices(Mat& gamma, const std::vector<int>& idx, const Mat& u) {
    const int k = static_cast<int>(idx.size());
    if (u.rows() != k || u.cols() != k) throw std::invalid_argument("index/rotation size mismatch");
    const int n = static_cast<int>(gamma.rows());
    Mat rows(k, n);
    for (int i = 0; i < k; ++i) rows.row(i) = gamma.row(idx[i]);
    rows = u.transpose() * rows;
    for (int i = 0; i < k; ++i) gamma.row(idx[i]) = rows.row(i);
    Mat cols(n, k);
    for (int i = 0; i < k; ++i) cols.col(i) = gamma.col(idx[i]);
    cols = cols * u;
    for (int i = 0; i < k; ++i) gamma.col(idx[i]) = cols.col(i);
}

/// Principal submatrix on the given index list, preserving order.
inline Mat submatrix(const Mat& m, const std::vector<int>& idx) {
    Mat out(idx.size(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i)
        for (size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
    return out;
}

/// Nearest special orthogonal matrix to `e` (Kabsch projection): SVD with the
/// smallest singular direction reflected when needed to reach det = +1.
inline Mat polar_special_orthogonal(const Mat& e) {
    Eigen::JacobiSVD<Mat> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat u = svd.matrixU(), v = svd.matrixV();
    Mat r = u * v.transpose();
    if (r.determinant() < 0.0) {
        u.col(u.cols() - 1) *= -1.0;
        r = u * v.transpose();
    }
    return r;
}

/// Haar-ish random special orthogonal matrix (QR of a Gaussian matrix with
/// sign-fixed diagonal, determinant forced to +1).
inline Mat random_special_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0.0) q.col(i) *= -1.0;
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
}

/// Pfaffian of a real antisymmetric matrix via skew-symmetric Gaussian
/// elimination with partial pivoting. O(n^3); exact up to roundoff.
inline double pfaffian(Mat a) {
    const int n = static_cast<int>(a.rows());
    if (n % 2 != 0) return 0.0;
    if (n == 0) return 1.0;
    double pf = 1.0;
    for (int k = 0; k < n - 1; k += 2) {
        int pivot = k + 1;
        double best = std::abs(a(k, k + 1));
        for (int j = k + 2; j < n; ++j) {
            if (std::abs(a(k, j)) > best) {
                best = std::abs(a(k, j));
                pivot = j;
            }
        }
        if (best == 0.0) return 0.0;
        if (pivot != k + 1) {
            a.row(k + 1).swap(a.row(pivot));
            a.col(k + 1).swap(a.col(pivot));
            pf = -pf;
        }
        pf *= a(k, k + 1);
        if (k + 2 < n) {
            // congruence shear zeroing rows/cols k,k+1 of the trailing block:
            // A(i,j) += (b_i a_j - a_i b_j)/c with a_i = A(k,i), b_i = A(k+1,i)
            const double inv = 1.0 / a(k, k + 1);
            for (int i = k + 2; i < n; ++i) {
                const double ai = a(k, i) * inv;
                const double bi = a(k + 1, i) * inv;
                for (int j = k + 2; j < n; ++j)
                    a(i, j) += bi * a(k, j) - ai * a(k + 1, j);
            }
        }
    }
    return pf;
}

}  // namespace fer
