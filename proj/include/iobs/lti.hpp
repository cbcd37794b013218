#pragma once

#include "iobs/interval.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace iobs::lti {

using interval::IntervalVector;
using matops::Matrix;
using matops::MatrixSplit;
using matops::SpectralCertificate;
using matops::Vector;

enum class TimeKind { CT, DT };

struct LtiPlant {
    Matrix F;  // n_x x n_x
    Matrix H;  // n_y x n_x
    Matrix D;  // n_x x n_d
    Matrix W;  // n_y x n_w
    TimeKind time_kind = TimeKind::CT;

    Eigen::Index nx() const { return F.rows(); }
    Eigen::Index ny() const { return H.rows(); }
    Eigen::Index nd() const { return D.cols(); }
    Eigen::Index nw() const { return W.cols(); }

    void check_dimensions() const;
};

// Disturbance and noise bounds evaluated at one instant.
struct BoundsAt {
    Vector d_lo, d_hi;
    Vector w_lo, w_hi;
};

// A bound pair without the component-wise ordering invariant; the x-form
// observer state is such a pair, ordered only through its z-image.
struct BoundPair {
    Vector up;
    Vector lo;
};

// Upper/lower right-hand sides (CT) or next values (DT) of the bound pair.
using BoundRates = BoundPair;

enum class DesignErrorKind {
    NotObservable,
    BadTargetStructure,
    NotControllable,
    SpectraOverlap,
    TNotInvertible,
};

class DesignError : public std::runtime_error {
public:
    DesignError(DesignErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    DesignErrorKind kind() const { return kind_; }
    const char* name() const;

private:
    DesignErrorKind kind_;
};

struct LtiDesign {
    Matrix A;
    Matrix B;
    Matrix T;
    Matrix T_inv;

    SpectralCertificate cert_A;
    bool observable = false;
    bool controllable = false;
    double sylvester_residual = 0.0;  // relative
    double sigma_min_T = 0.0;
    double cond_T = 0.0;
    int b_redraws = 0;

    // cached splits used by the stepping formulas
    MatrixSplit T_split, T_inv_split, TD_split, BW_split;
    Matrix T_inv_B;
};

LtiDesign design_lti(const LtiPlant& plant, const Matrix& A, const Matrix& B,
                     double structural_tol = 0.0);

// Deterministic diagonal target: CT distinct -lambda_i, DT distinct mu_i in (0,1),
// both nudged away from avoid_spectrum; B is a full one-per-row pattern.
std::pair<Matrix, Matrix> default_target(
    Eigen::Index n_x, Eigen::Index n_y, TimeKind kind,
    const std::vector<std::complex<double>>& avoid_spectrum);

IntervalVector init_bounds_z(const LtiDesign& d, const IntervalVector& x0);

BoundRates observer_rhs_z(const LtiDesign& d, const IntervalVector& z,
                          const Vector& y, const Vector& u, const BoundsAt& b);

IntervalVector back_map(const LtiDesign& d, const IntervalVector& z);

// x-coordinate observer form
BoundPair init_bounds_xhat(const LtiDesign& d, const IntervalVector& x0);

BoundRates observer_rhs_x(const LtiDesign& d, const LtiPlant& plant,
                          const BoundPair& xhat, const Vector& y,
                          const Vector& u, const BoundsAt& b);

IntervalVector output_bounds_x(const LtiDesign& d, const BoundPair& xhat);

}  // namespace iobs::lti
