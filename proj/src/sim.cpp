#include "iobs/sim.hpp"

#include <cmath>

namespace iobs::sim {

namespace {

using lti::BoundPair;
using lti::BoundsAt;

bool within(const Vector& lo, const Vector& x, const Vector& hi, double slack) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double pad = slack * (1.0 + std::abs(x(i)));
        if (x(i) < lo(i) - pad || x(i) > hi(i) + pad)
            return false;
    }
    return true;
}

double overshoot(const Vector& lo, const Vector& x, const Vector& hi) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale = 1.0 + std::abs(x(i));
        worst = std::max(worst, (lo(i) - x(i)) / scale);
        worst = std::max(worst, (x(i) - hi(i)) / scale);
    }
    return worst;
}

void check_finite(const Vector& v, double t, const char* part) {
    if (!v.allFinite())
        throw NonFiniteState(t, part);
}

BoundsAt bounds_at(const Scenario& s, double t) {
    BoundsAt b;
    b.d_lo = s.d_lo(t);
    b.d_hi = s.d_hi(t);
    b.w_lo = s.w_lo(t);
    b.w_hi = s.w_hi(t);
    return b;
}

long ct_step_count(const Scenario& s) {
    if (s.horizon < 0.0 || s.step <= 0.0)
        throw ValidationError("sim: horizon must be >= 0 and step > 0");
    return std::lround(s.horizon / s.step);
}

// Classic fixed-step RK4 on a flat state vector.
template <typename Rhs>
Vector rk4_step(const Rhs& rhs, double t, double h, const Vector& y) {
    const Vector k1 = rhs(t, y);
    const Vector k2 = rhs(t + h / 2.0, y + (h / 2.0) * k1);
    const Vector k3 = rhs(t + h / 2.0, y + (h / 2.0) * k2);
    const Vector k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

IntervalVector z_iv(const Vector& up, const Vector& lo) {
    return IntervalVector::clamped(lo, up, 1e-6);
}

void finalize_summary(SimulationTrace& tr, const Scenario& s) {
    tr.slack_used = s.containment_slack();
    const double c_T = s.c_T_override ? *s.c_T_override
                                      : ltv_ct::default_c_T(tr.sigma_min);
    tr.c_T = c_T;
    if (is_lti(s.kind)) {
        // constant invertible T: guaranteed from the start
        tr.t_star_reached = true;
        tr.t_star = tr.times.empty() ? 0.0 : tr.times.front();
        tr.t_star_index = 0;
    } else {
        const auto res = ltv_ct::detect_tstar(tr.times, tr.sigma_min, c_T);
        tr.t_star_reached = res.reached;
        tr.t_star = res.t_star;
        tr.t_star_index = res.index;
    }

    const double slack = tr.slack_used;
    tr.max_violation_x = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < tr.times.size(); ++i) {
        const bool ver =
            tr.t_star_reached && static_cast<Eigen::Index>(i) >= tr.t_star_index;
        tr.verified[i] = ver ? 1 : 0;
        tr.contained[i] = within(tr.x_lo[i], tr.x[i], tr.x_hi[i], slack) ? 1 : 0;
        if (ver)
            tr.max_violation_x =
                std::max(tr.max_violation_x, overshoot(tr.x_lo[i], tr.x[i], tr.x_hi[i]));
    }
    tr.final_width = tr.width_x.empty() ? 0.0 : tr.width_x.back();
}

void push_row(SimulationTrace& tr, double t, const Vector& x, const Vector& xlo,
              const Vector& xhi, const Vector& zlo, const Vector& zhi,
              double sigma, const Vector& z_truth, double z_slack) {
    check_finite(x, t, "plant state");
    check_finite(zlo, t, "observer lower bound");
    check_finite(zhi, t, "observer upper bound");
    tr.times.push_back(t);
    tr.x.push_back(x);
    tr.x_lo.push_back(xlo);
    tr.x_hi.push_back(xhi);
    tr.z_lo.push_back(zlo);
    tr.z_hi.push_back(zhi);
    tr.sigma_min.push_back(sigma);
    tr.width_x.push_back((xhi - xlo).maxCoeff());
    tr.z_contained.push_back(within(zlo, z_truth, zhi, z_slack) ? 1 : 0);
    tr.max_violation_z = std::max(tr.max_violation_z, overshoot(zlo, z_truth, zhi));
    tr.contained.push_back(0);
    tr.verified.push_back(0);
}

}  // namespace

Eigen::Index Scenario::nx() const {
    switch (kind) {
        case Kind::CtLti:
        case Kind::DtLti: return lti_plant.nx();
        case Kind::CtLtv: return ct_plant.n_x;
        case Kind::DtLtv: return dt_plant.n_x;
    }
    return 0;
}

double Scenario::containment_slack() const {
    if (slack)
        return *slack;
    return is_ct(kind) ? interval::kCtSlack : interval::kDtSlack;
}

bool SimulationTrace::containment_ok() const {
    for (size_t i = 0; i < times.size(); ++i)
        if (verified[i] && !contained[i])
            return false;
    return true;
}

void validate_truth_in_bounds(const Scenario& s) {
    auto check_signal = [](const Vector& lo, const Vector& v, const Vector& hi,
                           const char* path, double t) {
        if (lo.size() != v.size() || hi.size() != v.size())
            throw ValidationError(std::string(path) + ": bound dimension mismatch");
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (lo(i) > hi(i))
                throw ValidationError(std::string(path) + "_bounds[" +
                                      std::to_string(i) + "]: lo > hi at time " +
                                      std::to_string(t));
            if (v(i) < lo(i) || v(i) > hi(i))
                throw ValidationError(std::string(path) + "[" + std::to_string(i) +
                                      "]: truth leaves declared bounds at time " +
                                      std::to_string(t));
        }
    };

    for (Eigen::Index i = 0; i < s.x0.size(); ++i)
        if (s.x0(i) < s.x0_lo(i) || s.x0(i) > s.x0_hi(i))
            throw ValidationError("x0.value[" + std::to_string(i) +
                                  "]: outside its declared interval");

    if (is_ct(s.kind)) {
        const long n = ct_step_count(s);
        for (long i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) * s.step;
            check_signal(s.d_lo(t), s.d(t), s.d_hi(t), "signals.d", t);
            check_signal(s.w_lo(t), s.w(t), s.w_hi(t), "signals.w", t);
        }
    } else {
        const long n = std::lround(s.horizon);
        for (long k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k);
            check_signal(s.d_lo(t), s.d(t), s.d_hi(t), "signals.d", t);
            check_signal(s.w_lo(t), s.w(t), s.w_hi(t), "signals.w", t);
        }
    }
}

namespace {

SimulationTrace simulate_ct_lti(const Scenario& s) {
    const auto& plant = s.lti_plant;
    const lti::LtiDesign design = lti::design_lti(plant, s.A, s.B);
    const Eigen::Index n = plant.nx();
    const IntervalVector x0iv(s.x0_lo, s.x0_hi);
    const double z_slack = s.containment_slack();

    SimulationTrace tr;
    tr.kind = s.kind;
    tr.n_x = n;
    tr.n_z = n;

    Vector state(3 * n);
    state.segment(0, n) = s.x0;
    if (s.observer_form == ObserverForm::Z) {
        const IntervalVector z0 = lti::init_bounds_z(design, x0iv);
        state.segment(n, n) = z0.hi();
        state.segment(2 * n, n) = z0.lo();
    } else {
        const BoundPair p0 = lti::init_bounds_xhat(design, x0iv);
        state.segment(n, n) = p0.up;
        state.segment(2 * n, n) = p0.lo;
    }

    auto rhs = [&](double t, const Vector& y) {
        const Vector x = y.segment(0, n);
        const Vector meas = plant.H * x + plant.W * s.w(t);
        const Vector u = s.u(t);
        const BoundsAt b = bounds_at(s, t);
        Vector dy(3 * n);
        dy.segment(0, n) = plant.F * x + u + plant.D * s.d(t);
        if (s.observer_form == ObserverForm::Z) {
            const auto r = lti::observer_rhs_z(
                design, z_iv(y.segment(n, n), y.segment(2 * n, n)), meas, u, b);
            dy.segment(n, n) = r.up;
            dy.segment(2 * n, n) = r.lo;
        } else {
            const auto r = lti::observer_rhs_x(
                design, plant, BoundPair{y.segment(n, n), y.segment(2 * n, n)}, meas,
                u, b);
            dy.segment(n, n) = r.up;
            dy.segment(2 * n, n) = r.lo;
        }
        return dy;
    };

    auto record = [&](double t, const Vector& y) {
        const Vector x = y.segment(0, n);
        Vector zup, zlo, xlo, xhi;
        if (s.observer_form == ObserverForm::Z) {
            zup = y.segment(n, n);
            zlo = y.segment(2 * n, n);
            const auto xb = lti::back_map(design, z_iv(zup, zlo));
            xlo = xb.lo();
            xhi = xb.hi();
        } else {
            zup = design.T * y.segment(n, n);
            zlo = design.T * y.segment(2 * n, n);
            const auto xb = lti::output_bounds_x(
                design, BoundPair{y.segment(n, n), y.segment(2 * n, n)});
            xlo = xb.lo();
            xhi = xb.hi();
        }
        push_row(tr, t, x, xlo, xhi, zlo, zup, design.sigma_min_T,
                 design.T * x, z_slack);
    };

    const long steps = ct_step_count(s);
    record(0.0, state);
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * s.step;
        state = rk4_step(rhs, t, s.step, state);
        record(static_cast<double>(i + 1) * s.step, state);
    }
    finalize_summary(tr, s);
    return tr;
}

SimulationTrace simulate_ct_ltv(const Scenario& s) {
    const auto& plant = s.ct_plant;
    s.kkl.validate(lti::TimeKind::CT);
    const Matrix A = s.kkl.A();
    const Matrix& B = s.kkl.B;
    const Eigen::Index nx = plant.n_x;
    const Eigen::Index nz = s.kkl.nz();
    const double z_slack = s.containment_slack();

    Matrix T0 = s.T0 ? *s.T0 : Matrix::Zero(nz, nx);
    if (T0.rows() != nz || T0.cols() != nx)
        throw ValidationError("target.T0: must be n_z x n_x");

    const IntervalVector x0iv(s.x0_lo, s.x0_hi);
    const IntervalVector z0 = interval::interval_image(T0, x0iv);

    SimulationTrace tr;
    tr.kind = s.kind;
    tr.n_x = nx;
    tr.n_z = nz;

    const Eigen::Index tsz = nz * nx;
    Vector state(nx + 2 * nz + tsz);
    state.segment(0, nx) = s.x0;
    state.segment(nx, nz) = z0.hi();
    state.segment(nx + nz, nz) = z0.lo();
    state.segment(nx + 2 * nz, tsz) =
        Eigen::Map<const Vector>(T0.data(), tsz);  // column-major

    auto unpack_T = [&](const Vector& y) {
        return Matrix(Eigen::Map<const Matrix>(y.data() + nx + 2 * nz, nz, nx));
    };

    auto rhs = [&](double t, const Vector& y) {
        const Vector x = y.segment(0, nx);
        const Matrix F = plant.F(t);
        const Matrix H = plant.H(t);
        const Matrix D = plant.D(t);
        const Matrix W = plant.W(t);
        const Matrix T = unpack_T(y);
        const Vector meas = H * x + W * s.w(t);
        const Vector u = s.u(t);
        const BoundsAt b = bounds_at(s, t);
        Vector dy(y.size());
        dy.segment(0, nx) = F * x + u + D * s.d(t);
        const auto r = ltv_ct::observer_rhs_z_ltv(
            A, B, T, D, W, z_iv(y.segment(nx, nz), y.segment(nx + nz, nz)), meas, u,
            b);
        dy.segment(nx, nz) = r.up;
        dy.segment(nx + nz, nz) = r.lo;
        const Matrix dT = ltv_ct::t_dynamics_rhs(T, F, H, A, B);
        dy.segment(nx + 2 * nz, tsz) = Eigen::Map<const Vector>(dT.data(), tsz);
        return dy;
    };

    auto record = [&](double t, const Vector& y) {
        const Vector x = y.segment(0, nx);
        const Matrix T = unpack_T(y);
        const Vector zup = y.segment(nx, nz);
        const Vector zlo = y.segment(nx + nz, nz);
        const auto xb = ltv_ct::back_map_pinv(T, z_iv(zup, zlo));
        push_row(tr, t, x, xb.lo(), xb.hi(), zlo, zup,
                 matops::min_singular_value(T), T * x, z_slack);
        tr.T_traj.push_back(T);
    };

    const long steps = ct_step_count(s);
    record(0.0, state);
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * s.step;
        state = rk4_step(rhs, t, s.step, state);
        record(static_cast<double>(i + 1) * s.step, state);
    }
    finalize_summary(tr, s);
    return tr;
}

SimulationTrace simulate_dt_lti(const Scenario& s) {
    const auto& plant = s.lti_plant;
    const lti::LtiDesign design = lti::design_lti(plant, s.A, s.B);
    const Eigen::Index n = plant.nx();
    const IntervalVector x0iv(s.x0_lo, s.x0_hi);
    const double z_slack = s.containment_slack();

    SimulationTrace tr;
    tr.kind = s.kind;
    tr.n_x = n;
    tr.n_z = n;

    Vector x = s.x0;
    Vector up(n), lo(n);
    if (s.observer_form == ObserverForm::Z) {
        const IntervalVector z0 = lti::init_bounds_z(design, x0iv);
        up = z0.hi();
        lo = z0.lo();
    } else {
        const BoundPair p0 = lti::init_bounds_xhat(design, x0iv);
        up = p0.up;
        lo = p0.lo;
    }

    auto record = [&](double t) {
        Vector zup, zlo, xlo, xhi;
        if (s.observer_form == ObserverForm::Z) {
            zup = up;
            zlo = lo;
            const auto xb = lti::back_map(design, z_iv(up, lo));
            xlo = xb.lo();
            xhi = xb.hi();
        } else {
            zup = design.T * up;
            zlo = design.T * lo;
            const auto xb = lti::output_bounds_x(design, BoundPair{up, lo});
            xlo = xb.lo();
            xhi = xb.hi();
        }
        push_row(tr, t, x, xlo, xhi, zlo, zup, design.sigma_min_T,
                 design.T * x, z_slack);
    };

    const long steps = std::lround(s.horizon);
    record(0.0);
    for (long k = 0; k < steps; ++k) {
        const double tk = static_cast<double>(k);
        const Vector meas = plant.H * x + plant.W * s.w(tk);
        const Vector u = s.u(tk);
        const BoundsAt b = bounds_at(s, tk);
        Vector nup, nlo;
        if (s.observer_form == ObserverForm::Z) {
            const auto r = lti::observer_rhs_z(design, z_iv(up, lo), meas, u, b);
            nup = r.up;
            nlo = r.lo;
        } else {
            const auto r = lti::observer_rhs_x(design, plant, BoundPair{up, lo},
                                               meas, u, b);
            nup = r.up;
            nlo = r.lo;
        }
        x = plant.F * x + u + plant.D * s.d(tk);
        up = nup;
        lo = nlo;
        record(static_cast<double>(k + 1));
    }
    finalize_summary(tr, s);
    return tr;
}

SimulationTrace simulate_dt_ltv(const Scenario& s) {
    const auto& plant = s.dt_plant;
    s.kkl.validate(lti::TimeKind::DT);
    const Matrix A = s.kkl.A();
    const Matrix& B = s.kkl.B;
    const Eigen::Index nx = plant.n_x;
    const Eigen::Index nz = s.kkl.nz();
    const double z_slack = s.containment_slack();

    Matrix T = s.T0 ? *s.T0 : Matrix::Zero(nz, nx);
    if (T.rows() != nz || T.cols() != nx)
        throw ValidationError("target.T0: must be n_z x n_x");

    const IntervalVector x0iv(s.x0_lo, s.x0_hi);
    const IntervalVector z0 = interval::interval_image(T, x0iv);

    SimulationTrace tr;
    tr.kind = s.kind;
    tr.n_x = nx;
    tr.n_z = nz;

    Vector x = s.x0;
    Vector up = z0.hi();
    Vector lo = z0.lo();

    auto record = [&](double t) {
        const auto xb = ltv_dt::back_map_pinv_dt(T, z_iv(up, lo));
        push_row(tr, t, x, xb.lo(), xb.hi(), lo, up, matops::min_singular_value(T),
                 T * x, z_slack);
        tr.T_traj.push_back(T);
    };

    const long steps = std::lround(s.horizon);
    record(0.0);
    for (long k = 0; k < steps; ++k) {
        const double tk = static_cast<double>(k);
        const Matrix Fk = plant.F(k);
        const Matrix Hk = plant.H(k);
        const Matrix Dk = plant.D(k);
        const Matrix Wk = plant.W(k);
        const Vector meas = Hk * x + Wk * s.w(tk);
        const Vector u = s.u(tk);
        const Matrix T_next = ltv_dt::t_step(T, Fk, Hk, A, B);
        const auto r = ltv_dt::observer_step_z(A, B, T_next, Dk, Wk, z_iv(up, lo),
                                               meas, u, bounds_at(s, tk));
        x = Fk * x + u + Dk * s.d(tk);
        T = T_next;
        up = r.up;
        lo = r.lo;
        record(static_cast<double>(k + 1));
    }
    finalize_summary(tr, s);
    return tr;
}

}  // namespace

SimulationTrace simulate_ct(const Scenario& s) {
    validate_truth_in_bounds(s);
    return s.kind == Kind::CtLti ? simulate_ct_lti(s) : simulate_ct_ltv(s);
}

SimulationTrace simulate_dt(const Scenario& s) {
    validate_truth_in_bounds(s);
    return s.kind == Kind::DtLti ? simulate_dt_lti(s) : simulate_dt_ltv(s);
}

SimulationTrace simulate(const Scenario& s) {
    return is_ct(s.kind) ? simulate_ct(s) : simulate_dt(s);
}

}  // namespace iobs::sim
