#include "iobs/lti.hpp"

#include <Eigen/LU>
#include <random>
#include <sstream>

namespace iobs::lti {

namespace {

constexpr int kMaxBRedraws = 8;
constexpr int kMaxTargetNudges = 100;

double sylvester_rel_residual(const Matrix& a, const Matrix& f, const Matrix& c,
                              const Matrix& t) {
    const double num = (t * f - a * t - c).norm();
    const double den =
        a.norm() * t.norm() + t.norm() * f.norm() + c.norm() +
        std::numeric_limits<double>::min();
    return num / den;
}

double invertibility_tol(const Matrix& t) {
    Eigen::JacobiSVD<Matrix> svd(t);
    const double smax = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    return 1e-8 * std::max(1.0, smax);
}

}  // namespace

void LtiPlant::check_dimensions() const {
    if (F.rows() != F.cols())
        throw std::invalid_argument("plant: F must be square");
    if (H.cols() != F.rows())
        throw std::invalid_argument("plant: H column count must match F");
    if (D.rows() != F.rows())
        throw std::invalid_argument("plant: D row count must match F");
    if (W.rows() != H.rows())
        throw std::invalid_argument("plant: W row count must match H");
}

const char* DesignError::name() const {
    switch (kind_) {
        case DesignErrorKind::NotObservable: return "NotObservable";
        case DesignErrorKind::BadTargetStructure: return "BadTargetStructure";
        case DesignErrorKind::NotControllable: return "NotControllable";
        case DesignErrorKind::SpectraOverlap: return "SpectraOverlap";
        case DesignErrorKind::TNotInvertible: return "TNotInvertible";
    }
    return "DesignError";
}

LtiDesign design_lti(const LtiPlant& plant, const Matrix& A, const Matrix& B,
                     double structural_tol) {
    plant.check_dimensions();
    if (A.rows() != plant.nx() || A.cols() != plant.nx())
        throw std::invalid_argument("design_lti: A must be n_x x n_x");
    if (B.rows() != plant.nx() || B.cols() != plant.ny())
        throw std::invalid_argument("design_lti: B must be n_x x n_y");

    if (!matops::is_observable(plant.F, plant.H))
        throw DesignError(DesignErrorKind::NotObservable, "(F,H) is not observable");

    const auto cert = matops::certify(A, structural_tol);
    if (plant.time_kind == TimeKind::CT) {
        if (!(cert.max_real_part < 0.0) || !cert.is_metzler)
            throw DesignError(DesignErrorKind::BadTargetStructure,
                              "CT target A must be Hurwitz and Metzler");
    } else {
        if (!(cert.spectral_radius < 1.0) || !cert.is_nonnegative)
            throw DesignError(DesignErrorKind::BadTargetStructure,
                              "DT target A must be Schur and non-negative");
    }

    if (!matops::is_controllable(A, B))
        throw DesignError(DesignErrorKind::NotControllable, "(A,B) is not controllable");

    if (!matops::spectra_disjoint(A, plant.F))
        throw DesignError(DesignErrorKind::SpectraOverlap,
                          "eigenvalues of A are too close to those of F");

    // Remark-1 retry loop: a non-invertible T is a measure-zero event, so
    // redraw B deterministically before giving up.
    std::mt19937_64 rng(0x1057b5u);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix b_used = B;
    Matrix T;
    int redraws = 0;
    for (;;) {
        try {
            T = matops::solve_sylvester(A, plant.F, b_used * plant.H);
        } catch (const matops::NearSingularSylvester& e) {
            throw DesignError(DesignErrorKind::SpectraOverlap, e.what());
        }
        if (matops::min_singular_value(T) > invertibility_tol(T))
            break;
        if (redraws >= kMaxBRedraws)
            throw DesignError(DesignErrorKind::TNotInvertible,
                              "Sylvester solution T stayed singular after " +
                                  std::to_string(kMaxBRedraws) + " redraws of B");
        ++redraws;
        do {
            for (Eigen::Index i = 0; i < b_used.rows(); ++i)
                for (Eigen::Index j = 0; j < b_used.cols(); ++j)
                    b_used(i, j) = unit(rng);
        } while (!matops::is_controllable(A, b_used));
    }

    LtiDesign d;
    d.A = A;
    d.B = b_used;
    d.T = T;
    d.cert_A = cert;
    d.observable = true;
    d.controllable = true;
    d.b_redraws = redraws;
    d.sylvester_residual = sylvester_rel_residual(A, plant.F, b_used * plant.H, T);

    Eigen::PartialPivLU<Matrix> lu(T);
    d.T_inv = lu.solve(Matrix::Identity(T.rows(), T.cols()));

    Eigen::JacobiSVD<Matrix> svd(T);
    d.sigma_min_T = svd.singularValues()(svd.singularValues().size() - 1);
    d.cond_T = svd.singularValues()(0) / d.sigma_min_T;

    d.T_split = matops::split_pm(d.T);
    d.T_inv_split = matops::split_pm(d.T_inv);
    d.TD_split = matops::split_pm(d.T * plant.D);
    d.BW_split = matops::split_pm(d.B * plant.W);
    d.T_inv_B = d.T_inv * d.B;
    return d;
}

std::pair<Matrix, Matrix> default_target(
    Eigen::Index n_x, Eigen::Index n_y, TimeKind kind,
    const std::vector<std::complex<double>>& avoid_spectrum) {
    if (n_x < 1 || n_y < 1)
        throw std::invalid_argument("default_target: need n_x >= 1 and n_y >= 1");

    auto conflicts = [&](double candidate, const std::vector<double>& taken) {
        const double gap = 1e-6 * (1.0 + std::abs(candidate));
        for (const auto& ev : avoid_spectrum)
            if (std::abs(ev - std::complex<double>(candidate, 0.0)) <= gap)
                return true;
        for (double v : taken)
            if (std::abs(v - candidate) <= gap)
                return true;
        return false;
    };

    std::vector<double> diag;
    std::ostringstream tried;
    for (Eigen::Index i = 0; i < n_x; ++i) {
        double v = kind == TimeKind::CT
                       ? -static_cast<double>(i + 1)
                       : static_cast<double>(i + 1) /
                             static_cast<double>(std::max<Eigen::Index>(10, n_x + 1));
        int nudges = 0;
        while (conflicts(v, diag)) {
            tried << v << " ";
            v = kind == TimeKind::CT ? v - 0.37 : v * 0.97;
            if (++nudges > kMaxTargetNudges)
                throw std::runtime_error(
                    "default_target: could not separate target spectrum; tried " +
                    tried.str());
        }
        diag.push_back(v);
    }

    Matrix A = Matrix::Zero(n_x, n_x);
    for (Eigen::Index i = 0; i < n_x; ++i) A(i, i) = diag[static_cast<size_t>(i)];

    Matrix B = Matrix::Zero(n_x, n_y);
    for (Eigen::Index i = 0; i < n_x; ++i) B(i, i % n_y) = 1.0;
    // diagonal A with distinct entries plus one nonzero per row is controllable;
    // densify as a fallback if a degenerate pattern slips through
    for (Eigen::Index extra = 1; extra < n_y && !matops::is_controllable(A, B);
         ++extra)
        for (Eigen::Index i = 0; i < n_x; ++i) B(i, (i + extra) % n_y) = 1.0;
    return {A, B};
}

IntervalVector init_bounds_z(const LtiDesign& d, const IntervalVector& x0) {
    return interval::interval_image(d.T, x0);
}

BoundRates observer_rhs_z(const LtiDesign& d, const IntervalVector& z,
                          const Vector& y, const Vector& u, const BoundsAt& b) {
    if (z.size() != d.A.rows() || y.size() != d.B.cols() || u.size() != d.T.cols())
        throw std::invalid_argument("observer_rhs_z: dimension mismatch");
    const Vector common = d.B * y + d.T * u;
    BoundRates r;
    r.up = d.A * z.hi() + common + d.TD_split.pos * b.d_hi - d.TD_split.neg * b.d_lo +
           d.BW_split.neg * b.w_hi - d.BW_split.pos * b.w_lo;
    r.lo = d.A * z.lo() + common + d.TD_split.pos * b.d_lo - d.TD_split.neg * b.d_hi +
           d.BW_split.neg * b.w_lo - d.BW_split.pos * b.w_hi;
    return r;
}

IntervalVector back_map(const LtiDesign& d, const IntervalVector& z) {
    return interval::interval_image(d.T_inv, z);
}

BoundPair init_bounds_xhat(const LtiDesign& d, const IntervalVector& x0) {
    const IntervalVector z0 = init_bounds_z(d, x0);
    return {d.T_inv * z0.hi(), d.T_inv * z0.lo()};
}

BoundRates observer_rhs_x(const LtiDesign& d, const LtiPlant& plant,
                          const BoundPair& xhat, const Vector& y, const Vector& u,
                          const BoundsAt& b) {
    const Vector dist_up = d.T_inv * (d.TD_split.pos * b.d_hi - d.TD_split.neg * b.d_lo +
                                      d.BW_split.neg * b.w_hi - d.BW_split.pos * b.w_lo);
    const Vector dist_lo = d.T_inv * (d.TD_split.pos * b.d_lo - d.TD_split.neg * b.d_hi +
                                      d.BW_split.neg * b.w_lo - d.BW_split.pos * b.w_hi);
    BoundRates r;
    r.up = plant.F * xhat.up + u + d.T_inv_B * (y - plant.H * xhat.up) + dist_up;
    r.lo = plant.F * xhat.lo + u + d.T_inv_B * (y - plant.H * xhat.lo) + dist_lo;
    return r;
}

IntervalVector output_bounds_x(const LtiDesign& d, const BoundPair& xhat) {
    const Vector zu = d.T * xhat.up;
    const Vector zl = d.T * xhat.lo;
    return IntervalVector::clamped(
        d.T_inv_split.pos * zl - d.T_inv_split.neg * zu,
        d.T_inv_split.pos * zu - d.T_inv_split.neg * zl, 1e-9);
}

}  // namespace iobs::lti
