#include "iobs/ltv_ct.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace iobs::ltv_ct {

void KklTarget::validate(lti::TimeKind kind) const {
    Eigen::Index total = 0;
    for (auto m : block_dims) total += m;
    if (total != A_tilde.rows() || A_tilde.rows() != A_tilde.cols())
        throw std::invalid_argument("KklTarget: block dims do not sum to dim(A_tilde)");
    if (B.rows() != total || B.cols() != static_cast<Eigen::Index>(block_dims.size()))
        throw std::invalid_argument("KklTarget: B must be n_z x n_y block diagonal");
    if (gain <= 0.0)
        throw std::invalid_argument("KklTarget: gain must be positive");

    Eigen::Index row = 0;
    for (size_t i = 0; i < block_dims.size(); ++i) {
        const Eigen::Index m = block_dims[i];
        const Matrix ai = A_tilde.block(row, row, m, m);
        const Matrix bi = B.block(row, static_cast<Eigen::Index>(i), m, 1);
        if (kind == lti::TimeKind::CT) {
            if (!matops::is_hurwitz(ai) || !matops::is_metzler(ai))
                throw std::invalid_argument("KklTarget: block " + std::to_string(i) +
                                            " must be Hurwitz and Metzler");
        } else {
            if (!matops::is_schur(ai) || !matops::is_nonnegative(ai))
                throw std::invalid_argument("KklTarget: block " + std::to_string(i) +
                                            " must be Schur and non-negative");
        }
        if (!matops::is_controllable(ai, bi))
            throw std::invalid_argument("KklTarget: block " + std::to_string(i) +
                                        " pair (A_i,B_i) is not controllable");
        row += m;
    }
}

KklTarget default_kkl_target(const std::vector<Eigen::Index>& block_dims,
                             lti::TimeKind kind, double gain) {
    Eigen::Index nz = 0;
    for (auto m : block_dims) nz += m;
    KklTarget t;
    t.block_dims = block_dims;
    t.gain = gain;
    t.A_tilde = Matrix::Zero(nz, nz);
    t.B = Matrix::Zero(nz, static_cast<Eigen::Index>(block_dims.size()));
    Eigen::Index row = 0;
    for (size_t i = 0; i < block_dims.size(); ++i) {
        for (Eigen::Index j = 0; j < block_dims[i]; ++j) {
            t.A_tilde(row + j, row + j) = kind == lti::TimeKind::CT
                                              ? -static_cast<double>(j + 1)
                                              : static_cast<double>(j + 1) / 10.0;
            t.B(row + j, static_cast<Eigen::Index>(i)) = 1.0;
        }
        row += block_dims[i];
    }
    t.validate(kind);
    return t;
}

Matrix t_dynamics_rhs(const Matrix& T, const Matrix& F_t, const Matrix& H_t,
                      const Matrix& A, const Matrix& B) {
    if (T.rows() != A.rows() || T.cols() != F_t.rows() || H_t.cols() != F_t.cols() ||
        B.cols() != H_t.rows())
        throw std::invalid_argument("t_dynamics_rhs: dimension mismatch");
    return A * T - T * F_t + B * H_t;
}

BoundRates observer_rhs_z_ltv(const Matrix& A, const Matrix& B, const Matrix& T,
                              const Matrix& D_t, const Matrix& W_t,
                              const IntervalVector& z, const Vector& y,
                              const Vector& u, const BoundsAt& b) {
    const auto td = matops::split_pm(T * D_t);
    const auto bw = matops::split_pm(B * W_t);
    const Vector common = B * y + T * u;
    BoundRates r;
    r.up = A * z.hi() + common + td.pos * b.d_hi - td.neg * b.d_lo +
           bw.neg * b.w_hi - bw.pos * b.w_lo;
    r.lo = A * z.lo() + common + td.pos * b.d_lo - td.neg * b.d_hi +
           bw.neg * b.w_lo - bw.pos * b.w_hi;
    return r;
}

TstarResult detect_tstar(const std::vector<double>& times,
                         const std::vector<double>& sigma_min, double c_T,
                         double guard_fraction) {
    if (times.size() != sigma_min.size() || times.empty())
        throw std::invalid_argument("detect_tstar: bad trace");
    TstarResult r;
    r.c_T = c_T;

    size_t idx = times.size();
    for (size_t i = times.size(); i-- > 0;) {
        if (sigma_min[i] * sigma_min[i] >= c_T)
            idx = i;
        else
            break;
    }
    if (idx == times.size())
        return r;  // not even the last sample qualifies

    const double span = times.back() - times.front();
    if (times[idx] > times.back() - guard_fraction * span && span > 0.0)
        return r;  // only a trailing transient qualifies

    r.reached = true;
    r.index = static_cast<Eigen::Index>(idx);
    r.t_star = times[idx];
    return r;
}

double default_c_T(const std::vector<double>& sigma_min, double burn_in_fraction) {
    if (sigma_min.empty())
        return 0.0;
    const size_t start = std::min(
        sigma_min.size() - 1,
        static_cast<size_t>(burn_in_fraction * static_cast<double>(sigma_min.size())));
    std::vector<double> tail(sigma_min.begin() + static_cast<std::ptrdiff_t>(start),
                             sigma_min.end());
    std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2),
                     tail.end());
    const double median = tail[tail.size() / 2];
    const double s = 0.05 * median;
    return s * s;
}

IntervalVector back_map_pinv(const Matrix& T, const IntervalVector& z) {
    return interval::interval_image(matops::pinv(T), z);
}

namespace {

using RowVec = Eigen::RowVectorXd;

// O_{i,1}(t) = H_i(t); O_{i,j+1}(t) = dO_{i,j}/dt + O_{i,j}(t) F(t),
// time derivative by central differences
RowVec obs_row(const CtLtvPlant& plant, Eigen::Index output, Eigen::Index level,
               double t, double h) {
    if (level == 0)
        return plant.H(t).row(output);
    const RowVec prev = obs_row(plant, output, level - 1, t, h);
    const RowVec fwd = obs_row(plant, output, level - 1, t + h, h);
    const RowVec bwd = obs_row(plant, output, level - 1, t - h, h);
    return (fwd - bwd) / (2.0 * h) + prev * plant.F(t);
}

}  // namespace

ObservabilityReport empirical_observability_check(
    const CtLtvPlant& plant, const std::vector<Eigen::Index>& m_list,
    const std::vector<double>& grid, double fd_step) {
    if (m_list.size() != static_cast<size_t>(plant.n_y))
        throw std::invalid_argument("empirical_observability_check: need one m per output");
    ObservabilityReport rep;
    rep.c_o_estimate = std::numeric_limits<double>::infinity();
    for (double t : grid) {
        Matrix gram = Matrix::Zero(plant.n_x, plant.n_x);
        for (Eigen::Index i = 0; i < plant.n_y; ++i) {
            const Eigen::Index mi = m_list[static_cast<size_t>(i)];
            Matrix stack(mi, plant.n_x);
            for (Eigen::Index j = 0; j < mi; ++j)
                stack.row(j) = obs_row(plant, i, j, t, fd_step);
            gram += stack.transpose() * stack;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < rep.c_o_estimate) {
            rep.c_o_estimate = lmin;
            rep.worst_time = t;
        }
    }
    if (grid.empty())
        rep.c_o_estimate = 0.0;
    rep.positive = rep.c_o_estimate > 0.0;
    return rep;
}

}  // namespace iobs::ltv_ct
