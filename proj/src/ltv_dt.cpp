#include "iobs/ltv_dt.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace iobs::ltv_dt {

namespace {

Eigen::FullPivLU<Matrix> lu_or_throw(const Matrix& f, Eigen::Index k) {
    Eigen::FullPivLU<Matrix> lu(f);
    if (!lu.isInvertible())
        throw SingularFk("F_k is numerically singular at k = " + std::to_string(k));
    return lu;
}

}  // namespace

Matrix t_step(const Matrix& T_k, const Matrix& F_k, const Matrix& H_k,
              const Matrix& A, const Matrix& B) {
    if (F_k.rows() != F_k.cols())
        throw std::invalid_argument("t_step: F_k must be square");
    const Matrix rhs = A * T_k + B * H_k;
    // T_{k+1} = rhs * F_k^{-1}  <=>  F_k^T T_{k+1}^T = rhs^T
    Eigen::FullPivLU<Matrix> lu(F_k.transpose());
    if (!lu.isInvertible())
        throw SingularFk("F_k is numerically singular");
    return lu.solve(rhs.transpose()).transpose();
}

BoundRates observer_step_z(const Matrix& A, const Matrix& B, const Matrix& T_next,
                           const Matrix& D_k, const Matrix& W_k,
                           const IntervalVector& z, const Vector& y_k,
                           const Vector& u_k, const BoundsAt& b) {
    const auto td = matops::split_pm(T_next * D_k);
    const auto bw = matops::split_pm(B * W_k);
    const Vector common = B * y_k + T_next * u_k;
    BoundRates r;
    r.up = A * z.hi() + common + td.pos * b.d_hi - td.neg * b.d_lo +
           bw.neg * b.w_hi - bw.pos * b.w_lo;
    r.lo = A * z.lo() + common + td.pos * b.d_lo - td.neg * b.d_hi +
           bw.neg * b.w_lo - bw.pos * b.w_hi;
    return r;
}

UcoReport uco_check(const DtLtvPlant& plant, const std::vector<Eigen::Index>& m_list,
                    Eigen::Index k_lo, Eigen::Index k_hi) {
    if (m_list.size() != static_cast<size_t>(plant.n_y))
        throw std::invalid_argument("uco_check: need one m per output");
    Eigen::Index m_max = 0;
    for (auto m : m_list) m_max = std::max(m_max, m);
    if (k_lo < m_max)
        throw std::invalid_argument("uco_check: k range must start at max m_i");

    UcoReport rep;
    rep.c_o_estimate = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = k_lo; k <= k_hi; ++k) {
        // Q_j = F_j^{-1} ... F_{k-1}^{-1}, built backwards from j = k-1
        std::vector<Matrix> q(static_cast<size_t>(m_max));
        Matrix acc = Matrix::Identity(plant.n_x, plant.n_x);
        for (Eigen::Index back = 1; back <= m_max; ++back) {
            const Eigen::Index j = k - back;
            acc = lu_or_throw(plant.F(j), j).solve(acc);
            q[static_cast<size_t>(back - 1)] = acc;  // index back-1 holds Q_{k-back}
        }
        Matrix gram = Matrix::Zero(plant.n_x, plant.n_x);
        for (Eigen::Index i = 0; i < plant.n_y; ++i) {
            const Eigen::Index mi = m_list[static_cast<size_t>(i)];
            for (Eigen::Index back = 1; back <= mi; ++back) {
                const Eigen::Index j = k - back;
                const Eigen::RowVectorXd row =
                    plant.H(j).row(i) * q[static_cast<size_t>(back - 1)];
                gram += row.transpose() * row;
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < rep.c_o_estimate) {
            rep.c_o_estimate = lmin;
            rep.worst_k = k;
        }
    }
    rep.positive = rep.c_o_estimate > 0.0;
    return rep;
}

KstarResult detect_kstar(const std::vector<double>& sigma_min, double c_T,
                         double guard_fraction) {
    if (sigma_min.empty())
        throw std::invalid_argument("detect_kstar: empty trace");
    KstarResult r;
    r.c_T = c_T;
    size_t idx = sigma_min.size();
    for (size_t i = sigma_min.size(); i-- > 0;) {
        if (sigma_min[i] * sigma_min[i] >= c_T)
            idx = i;
        else
            break;
    }
    if (idx == sigma_min.size())
        return r;
    const double guard =
        guard_fraction * static_cast<double>(sigma_min.size() - 1);
    if (sigma_min.size() > 1 &&
        static_cast<double>(idx) > static_cast<double>(sigma_min.size() - 1) - guard)
        return r;
    r.reached = true;
    r.k_star = static_cast<Eigen::Index>(idx);
    return r;
}

IntervalVector back_map_pinv_dt(const Matrix& T_k, const IntervalVector& z) {
    return interval::interval_image(matops::pinv(T_k), z);
}

}  // namespace iobs::ltv_dt
