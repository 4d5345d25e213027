#include "thomaslab/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace tlab {

Eigen::MatrixXd dual_matrix(const Eigen::MatrixXd& basis_rows) {
    const auto m = basis_rows.rows();
    if (m == 0 || basis_rows.cols() != m)
        throw std::invalid_argument("lattice basis must be a nonempty square matrix");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_rows);
    if (!lu.isInvertible())
        throw std::invalid_argument(
            "lattice basis is singular: the rows are linearly dependent, no dual basis exists");
    // Rows d_j of the dual solve B * d_j^T = 2*pi*e_j, i.e. D = 2*pi*B^{-T}.
    return (2.0 * M_PI) * lu.inverse().transpose();
}

void for_each_dual_point(const Eigen::MatrixXd& dual_rows,
                         const Eigen::VectorXd& center, double radius,
                         const std::function<void(const int*, const Eigen::VectorXd&)>& fn) {
    if (radius < 0) throw std::invalid_argument("enumeration radius must be nonnegative");
    const int m = static_cast<int>(dual_rows.rows());
    if (center.size() != m)
        throw std::invalid_argument("enumeration center has wrong dimension");

    // cartesian(n) = Dt * n with Dt = dual_rows^T; the integer box
    // |n_j - (Dt^{-1} center)_j| <= radius * |row_j(Dt^{-1})| covers the ball.
    const Eigen::MatrixXd Dt = dual_rows.transpose();
    const Eigen::MatrixXd inv = Dt.inverse();
    const Eigen::VectorXd c0 = inv * center;

    std::vector<long> lo(m), hi(m);
    for (int j = 0; j < m; ++j) {
        const double w = radius * inv.row(j).norm();
        lo[j] = static_cast<long>(std::ceil(c0(j) - w - 1e-9));
        hi[j] = static_cast<long>(std::floor(c0(j) + w + 1e-9));
        if (lo[j] > hi[j]) return;
    }

    const double r2 = radius * radius;
    const double r2_cut = r2 * (1.0 + 1e-12);

    std::vector<int> n(m);
    std::vector<long> cur(lo);
    Eigen::VectorXd cart(m), diff(m);
    for (;;) {
        for (int j = 0; j < m; ++j) n[j] = static_cast<int>(cur[j]);
        cart.setZero();
        for (int j = 0; j < m; ++j) cart += static_cast<double>(cur[j]) * dual_rows.row(j).transpose();
        diff = cart - center;
        const double d2 = diff.squaredNorm();
        if (d2 <= r2_cut) fn(n.data(), cart);
        // odometer: last coordinate fastest keeps lexicographic order
        int j = m - 1;
        while (j >= 0) {
            if (++cur[j] <= hi[j]) break;
            cur[j] = lo[j];
            --j;
        }
        if (j < 0) return;
    }
}

std::vector<DualPoint> enumerate_points(const Eigen::MatrixXd& dual_rows,
                                        const Eigen::VectorXd& center, double radius) {
    std::vector<DualPoint> out;
    const int m = static_cast<int>(dual_rows.rows());
    for_each_dual_point(dual_rows, center, radius,
                        [&](const int* coords, const Eigen::VectorXd& cart) {
                            DualPoint p;
                            p.coords.assign(coords, coords + m);
                            p.cartesian = cart;
                            out.push_back(std::move(p));
                        });
    return out;
}

Lattice::Lattice(Eigen::MatrixXd basis_rows) {
    const auto m = basis_rows.rows();
    if (m == 0 || basis_rows.cols() != m)
        throw std::invalid_argument("lattice basis must be a nonempty square matrix");
    const double nb1 = basis_rows.row(0).norm();
    if (!(nb1 > 0))
        throw std::invalid_argument("first lattice vector must be nonzero");
    basis_ = basis_rows / nb1;
    dual_ = dual_matrix(basis_);
    cell_volume_ = std::abs(basis_.determinant());
    if (!(cell_volume_ > 0))
        throw std::invalid_argument(
            "lattice basis is singular: cell volume would vanish");
}

DualLattice dual_basis(const Lattice& lat) { return DualLattice{lat.dual()}; }

std::vector<DualPoint> enumerate_dual_points(const Lattice& lat,
                                             const Eigen::VectorXd& center, double radius) {
    return enumerate_points(lat.dual(), center, radius);
}

} // namespace tlab
