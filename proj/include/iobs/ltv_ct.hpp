#pragma once

#include "iobs/lti.hpp"

#include <functional>
#include <optional>

namespace iobs::ltv_ct {

using interval::IntervalVector;
using lti::BoundRates;
using lti::BoundsAt;
using matops::Matrix;
using matops::Vector;

using MatrixFn = std::function<Matrix(double)>;

struct CtLtvPlant {
    MatrixFn F, H, D, W;
    Eigen::Index n_x = 0, n_y = 0, n_d = 0, n_w = 0;
};

// Block-diagonal KKL target: A = gain * A_tilde, B = diag(B_tilde_i).
struct KklTarget {
    std::vector<Eigen::Index> block_dims;  // m_i per output
    Matrix A_tilde;                        // n_z x n_z block diagonal
    Matrix B;                              // n_z x n_y block diagonal
    double gain = 1.0;

    Eigen::Index nz() const { return A_tilde.rows(); }
    Matrix A() const { return gain * A_tilde; }

    // each block Hurwitz+Metzler (CT) or Schur+non-negative (DT), controllable
    void validate(lti::TimeKind kind) const;
};

// Builds the canonical diag(-1,...,-m_i) / ones target for given block dims.
KklTarget default_kkl_target(const std::vector<Eigen::Index>& block_dims,
                             lti::TimeKind kind, double gain);

// dT/dt = A*T - T*F(t) + B*H(t)
Matrix t_dynamics_rhs(const Matrix& T, const Matrix& F_t, const Matrix& H_t,
                      const Matrix& A, const Matrix& B);

BoundRates observer_rhs_z_ltv(const Matrix& A, const Matrix& B, const Matrix& T,
                              const Matrix& D_t, const Matrix& W_t,
                              const IntervalVector& z, const Vector& y,
                              const Vector& u, const BoundsAt& b);

struct TstarResult {
    bool reached = false;
    double t_star = 0.0;
    Eigen::Index index = 0;  // grid index of t_star
    double c_T = 0.0;
};

// Smallest grid time after which sigma_min(T)^2 >= c_T through the horizon end;
// candidates inside the trailing guard window report NotReached.
TstarResult detect_tstar(const std::vector<double>& times,
                         const std::vector<double>& sigma_min, double c_T,
                         double guard_fraction = 0.05);

// (0.05 * median of sigma_min after burn-in)^2
double default_c_T(const std::vector<double>& sigma_min,
                   double burn_in_fraction = 0.1);

IntervalVector back_map_pinv(const Matrix& T, const IntervalVector& z);

struct ObservabilityReport {
    double c_o_estimate = 0.0;
    bool positive = false;
    double worst_time = 0.0;
};

// Empirical A2-style check: builds the instantaneous observability stacks on a
// grid with central finite differences and reports min lambda_min. Advisory.
ObservabilityReport empirical_observability_check(
    const CtLtvPlant& plant, const std::vector<Eigen::Index>& m_list,
    const std::vector<double>& grid, double fd_step);

}  // namespace iobs::ltv_ct
