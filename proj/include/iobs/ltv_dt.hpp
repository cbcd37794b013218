#pragma once

#include "iobs/ltv_ct.hpp"

namespace iobs::ltv_dt {

using interval::IntervalVector;
using lti::BoundRates;
using lti::BoundsAt;
using matops::Matrix;
using matops::Vector;

using MatrixSeq = std::function<Matrix(Eigen::Index)>;

struct DtLtvPlant {
    MatrixSeq F, H, D, W;
    Eigen::Index n_x = 0, n_y = 0, n_d = 0, n_w = 0;
};

class SingularFk : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// T_{k+1} F_k = A T_k + B H_k, solved without forming F_k^{-1}
Matrix t_step(const Matrix& T_k, const Matrix& F_k, const Matrix& H_k,
              const Matrix& A, const Matrix& B);

// Eq-18-style recursion; T_next = T_{k+1} multiplies u_k and D_k.
BoundRates observer_step_z(const Matrix& A, const Matrix& B, const Matrix& T_next,
                           const Matrix& D_k, const Matrix& W_k,
                           const IntervalVector& z, const Vector& y_k,
                           const Vector& u_k, const BoundsAt& b);

struct UcoReport {
    double c_o_estimate = 0.0;
    bool positive = false;
    Eigen::Index worst_k = 0;
};

UcoReport uco_check(const DtLtvPlant& plant, const std::vector<Eigen::Index>& m_list,
                    Eigen::Index k_lo, Eigen::Index k_hi);

struct KstarResult {
    bool reached = false;
    Eigen::Index k_star = 0;
    double c_T = 0.0;
};

KstarResult detect_kstar(const std::vector<double>& sigma_min, double c_T,
                         double guard_fraction = 0.05);

IntervalVector back_map_pinv_dt(const Matrix& T_k, const IntervalVector& z);

}  // namespace iobs::ltv_dt
