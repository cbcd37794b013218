#include <doctest.h>

#include "iobs/ltv_ct.hpp"

#include <cmath>
#include <random>

using namespace iobs::ltv_ct;
namespace mo = iobs::matops;
namespace iv = iobs::interval;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

CtLtvPlant pendulum_plant() {
    CtLtvPlant p;
    p.n_x = 2;
    p.n_y = 1;
    p.n_d = 2;
    p.n_w = 1;
    p.F = [](double t) {
        Matrix f(2, 2);
        f << 0, 1, -9.8 / (1.0 + 0.3 * std::sin(0.5 * t)), -1;
        return f;
    };
    p.H = [](double) {
        Matrix h(1, 2);
        h << 1, 0;
        return h;
    };
    p.D = [](double) { return Matrix(Matrix::Identity(2, 2)); };
    p.W = [](double) { return Matrix(Matrix::Ones(1, 1)); };
    return p;
}

}  // namespace

TEST_CASE("default_kkl_target") {
    SUBCASE("single block, CT") {
        const KklTarget t = default_kkl_target({2}, iobs::lti::TimeKind::CT, 2.0);
        CHECK(t.nz() == 2);
        CHECK(t.A_tilde(0, 0) == doctest::Approx(-1.0));
        CHECK(t.A_tilde(1, 1) == doctest::Approx(-2.0));
        CHECK(t.A_tilde(0, 1) == 0.0);
        CHECK(t.B(0, 0) == 1.0);
        CHECK(t.B(1, 0) == 1.0);
        const Matrix a = t.A();
        CHECK(a(0, 0) == doctest::Approx(-2.0));
        CHECK(a(1, 1) == doctest::Approx(-4.0));
        CHECK_NOTHROW(t.validate(iobs::lti::TimeKind::CT));
    }
    SUBCASE("two blocks are block diagonal") {
        const KklTarget t = default_kkl_target({2, 3}, iobs::lti::TimeKind::CT, 1.0);
        CHECK(t.nz() == 5);
        CHECK(t.B.cols() == 2);
        CHECK(t.B(0, 1) == 0.0);
        CHECK(t.B(2, 0) == 0.0);
        CHECK(t.A_tilde(2, 2) == doctest::Approx(-1.0));  // restart per block
        CHECK(t.A_tilde(4, 4) == doctest::Approx(-3.0));
    }
    SUBCASE("DT blocks") {
        const KklTarget t = default_kkl_target({2}, iobs::lti::TimeKind::DT, 1.0);
        CHECK(t.A_tilde(0, 0) == doctest::Approx(0.1));
        CHECK(t.A_tilde(1, 1) == doctest::Approx(0.2));
        CHECK_NOTHROW(t.validate(iobs::lti::TimeKind::DT));
    }
    SUBCASE("validation rejects bad structure") {
        KklTarget t = default_kkl_target({2}, iobs::lti::TimeKind::CT, 1.0);
        t.gain = 0.0;
        CHECK_THROWS_AS(t.validate(iobs::lti::TimeKind::CT), std::invalid_argument);
        t.gain = 1.0;
        t.A_tilde(0, 1) = -0.5;  // non-Metzler block
        CHECK_THROWS_AS(t.validate(iobs::lti::TimeKind::CT), std::invalid_argument);
        t.A_tilde(0, 1) = 0.0;
        t.A_tilde(1, 1) = -1.0;  // repeated eigenvalue: block not controllable
        CHECK_THROWS_AS(t.validate(iobs::lti::TimeKind::CT), std::invalid_argument);
    }
}

TEST_CASE("t_dynamics_rhs") {
    const CtLtvPlant p = pendulum_plant();
    const KklTarget tgt = default_kkl_target({2}, iobs::lti::TimeKind::CT, 2.0);

    SUBCASE("zero T gives the forcing term B*H") {
        const Matrix rhs =
            t_dynamics_rhs(Matrix::Zero(2, 2), p.F(0.0), p.H(0.0), tgt.A(), tgt.B);
        Matrix expect(2, 2);
        expect << 1, 0, 1, 0;
        CHECK((rhs - expect).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("entrywise transcription oracle") {
        std::mt19937_64 rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Index nz = 2 + static_cast<Eigen::Index>(rng() % 3);
            const Eigen::Index nx = 2 + static_cast<Eigen::Index>(rng() % 3);
            const Eigen::Index ny = 1 + static_cast<Eigen::Index>(rng() % 2);
            const Matrix T = random_matrix(rng, nz, nx);
            const Matrix F = random_matrix(rng, nx, nx);
            const Matrix H = random_matrix(rng, ny, nx);
            const Matrix A = random_matrix(rng, nz, nz);
            const Matrix B = random_matrix(rng, nz, ny);
            const Matrix rhs = t_dynamics_rhs(T, F, H, A, B);
            for (Eigen::Index i = 0; i < nz; ++i)
                for (Eigen::Index j = 0; j < nx; ++j) {
                    double v = 0.0;
                    for (Eigen::Index l = 0; l < nz; ++l) v += A(i, l) * T(l, j);
                    for (Eigen::Index l = 0; l < nx; ++l) v -= T(i, l) * F(l, j);
                    for (Eigen::Index l = 0; l < ny; ++l) v += B(i, l) * H(l, j);
                    CHECK(std::abs(rhs(i, j) - v) < 1e-13);
                }
        }
    }

    SUBCASE("stationary solution of the frozen system is a fixed point") {
        const Matrix F0 = p.F(0.0);
        const Matrix H0 = p.H(0.0);
        const Matrix T = mo::solve_sylvester(tgt.A(), F0, tgt.B * H0);
        const Matrix rhs = t_dynamics_rhs(T, F0, H0, tgt.A(), tgt.B);
        CHECK(rhs.cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(t_dynamics_rhs(Matrix::Zero(2, 3), p.F(0.0), p.H(0.0),
                                       tgt.A(), tgt.B),
                        std::invalid_argument);
    }
}

TEST_CASE("observer_rhs_z_ltv against an entrywise transcription") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index nz = 2 + static_cast<Eigen::Index>(rng() % 3);
        const Eigen::Index nx = nz;
        const Eigen::Index ny = 1 + static_cast<Eigen::Index>(rng() % 2);
        const Matrix A = random_matrix(rng, nz, nz);
        const Matrix B = random_matrix(rng, nz, ny);
        const Matrix T = random_matrix(rng, nz, nx);
        const Matrix D = random_matrix(rng, nx, 2);
        const Matrix W = random_matrix(rng, ny, 1);
        Vector zlo = random_matrix(rng, nz, 1);
        Vector zhi = zlo.array() + 0.4;
        const Vector y = random_matrix(rng, ny, 1);
        const Vector u = random_matrix(rng, nx, 1);
        iobs::lti::BoundsAt b;
        b.d_lo = random_matrix(rng, 2, 1);
        b.d_hi = b.d_lo.array() + 0.2;
        b.w_lo = random_matrix(rng, 1, 1);
        b.w_hi = b.w_lo.array() + 0.1;

        const auto r =
            observer_rhs_z_ltv(A, B, T, D, W, iv::IntervalVector(zlo, zhi), y, u, b);

        const Matrix td = T * D;
        const Matrix bw = B * W;
        for (Eigen::Index i = 0; i < nz; ++i) {
            double up = 0.0, lo = 0.0;
            for (Eigen::Index l = 0; l < nz; ++l) {
                up += A(i, l) * zhi(l);
                lo += A(i, l) * zlo(l);
            }
            for (Eigen::Index l = 0; l < ny; ++l) {
                up += B(i, l) * y(l);
                lo += B(i, l) * y(l);
            }
            for (Eigen::Index l = 0; l < nx; ++l) {
                up += T(i, l) * u(l);
                lo += T(i, l) * u(l);
            }
            for (Eigen::Index l = 0; l < 2; ++l) {
                const double tp = std::max(td(i, l), 0.0);
                const double tn = std::max(-td(i, l), 0.0);
                up += tp * b.d_hi(l) - tn * b.d_lo(l);
                lo += tp * b.d_lo(l) - tn * b.d_hi(l);
            }
            const double bp = std::max(bw(i, 0), 0.0);
            const double bn = std::max(-bw(i, 0), 0.0);
            up += bn * b.w_hi(0) - bp * b.w_lo(0);
            lo += bn * b.w_lo(0) - bp * b.w_hi(0);
            CHECK(r.up(i) == doctest::Approx(up).epsilon(1e-12));
            CHECK(r.lo(i) == doctest::Approx(lo).epsilon(1e-12));
        }
    }
}

TEST_CASE("detect_tstar") {
    std::vector<double> times;
    for (int i = 0; i <= 100; ++i) times.push_back(0.1 * i);

    SUBCASE("qualifies from the start") {
        std::vector<double> sigma(times.size(), 1.0);
        const auto r = detect_tstar(times, sigma, 0.25);
        CHECK(r.reached);
        CHECK(r.index == 0);
        CHECK(r.t_star == doctest::Approx(0.0));
    }
    SUBCASE("qualifies mid-run") {
        std::vector<double> sigma(times.size(), 0.1);
        for (size_t i = 40; i < sigma.size(); ++i) sigma[i] = 1.0;
        const auto r = detect_tstar(times, sigma, 0.25);
        CHECK(r.reached);
        CHECK(r.index == 40);
        CHECK(r.t_star == doctest::Approx(4.0));
    }
    SUBCASE("a dip restarts the suffix") {
        std::vector<double> sigma(times.size(), 1.0);
        sigma[60] = 0.0;
        const auto r = detect_tstar(times, sigma, 0.25);
        CHECK(r.reached);
        CHECK(r.index == 61);
    }
    SUBCASE("never qualifies") {
        std::vector<double> sigma(times.size(), 0.1);
        const auto r = detect_tstar(times, sigma, 0.25);
        CHECK_FALSE(r.reached);
    }
    SUBCASE("trailing transient inside the guard window is rejected") {
        std::vector<double> sigma(times.size(), 0.1);
        for (size_t i = 98; i < sigma.size(); ++i) sigma[i] = 1.0;
        const auto r = detect_tstar(times, sigma, 0.25, 0.05);
        CHECK_FALSE(r.reached);
    }
    SUBCASE("threshold is on sigma squared") {
        std::vector<double> sigma(times.size(), 0.49);
        CHECK_FALSE(detect_tstar(times, sigma, 0.25).reached);
        std::vector<double> sigma2(times.size(), 0.51);
        CHECK(detect_tstar(times, sigma2, 0.25).reached);
    }
}

TEST_CASE("default_c_T") {
    SUBCASE("constant trace") {
        std::vector<double> sigma(100, 2.0);
        CHECK(default_c_T(sigma) == doctest::Approx(0.01));  // (0.05*2)^2
    }
    SUBCASE("burn-in discards the initial transient") {
        std::vector<double> sigma(100, 1.0);
        for (int i = 0; i < 10; ++i) sigma[static_cast<size_t>(i)] = 0.0;
        CHECK(default_c_T(sigma, 0.1) == doctest::Approx(0.0025));  // (0.05*1)^2
    }
    SUBCASE("empty trace") { CHECK(default_c_T({}) == 0.0); }
}

TEST_CASE("back_map_pinv") {
    SUBCASE("square invertible T matches the inverse image") {
        Matrix t(2, 2);
        t << 2, 0, 0, 4;
        Vector lo(2), hi(2);
        lo << -2, 4;
        hi << 2, 8;
        const auto out = back_map_pinv(t, iv::IntervalVector(lo, hi));
        CHECK(out.lo()(0) == doctest::Approx(-1.0));
        CHECK(out.hi()(0) == doctest::Approx(1.0));
        CHECK(out.lo()(1) == doctest::Approx(1.0));
        CHECK(out.hi()(1) == doctest::Approx(2.0));
    }
    SUBCASE("tall T recovers a point through its left inverse") {
        std::mt19937_64 rng(23);
        const Matrix t = random_matrix(rng, 4, 2);
        const Vector x = random_matrix(rng, 2, 1);
        const auto out = back_map_pinv(t, iv::IntervalVector::point(t * x));
        CHECK((out.lo() - x).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((out.hi() - x).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("empirical_observability_check") {
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(0.2 * i);

    SUBCASE("pendulum is uniformly observable with m = 2") {
        const auto rep = empirical_observability_check(pendulum_plant(), {2}, grid, 1e-4);
        CHECK(rep.positive);
        CHECK(rep.c_o_estimate > 0.1);
    }
    SUBCASE("zero output map fails") {
        CtLtvPlant p = pendulum_plant();
        p.H = [](double) { return Matrix(Matrix::Zero(1, 2)); };
        const auto rep = empirical_observability_check(p, {2}, grid, 1e-4);
        CHECK_FALSE(rep.positive);
        CHECK(rep.c_o_estimate == doctest::Approx(0.0));
    }
    SUBCASE("frozen LTI stack matches the classical observability matrix") {
        // constant F, H: the m = n stack is [H; H*F], so the Gram eigenvalues
        // can be cross-checked directly
        Matrix f(2, 2), h(1, 2);
        f << 0, 1, -9.8, -1;
        h << 1, 0;
        CtLtvPlant p;
        p.n_x = 2;
        p.n_y = 1;
        p.F = [f](double) { return f; };
        p.H = [h](double) { return h; };
        const auto rep = empirical_observability_check(p, {2}, {0.0}, 1e-4);
        Matrix stack(2, 2);
        stack.row(0) = h;
        stack.row(1) = h * f;
        Eigen::SelfAdjointEigenSolver<Matrix> es(stack.transpose() * stack);
        CHECK(rep.c_o_estimate == doctest::Approx(es.eigenvalues().minCoeff()));
        CHECK(rep.positive);
    }
    SUBCASE("one m per output is required") {
        CHECK_THROWS_AS(
            empirical_observability_check(pendulum_plant(), {2, 2}, grid, 1e-4),
            std::invalid_argument);
    }
}

TEST_CASE("T dynamics converge toward the frozen Sylvester solution") {
    // slow the parameter variation to near zero: the integrated T should settle
    // at the stationary Sylvester solution of the frozen system
    Matrix f(2, 2), h(1, 2);
    f << 0, 1, -9.8, -1;
    h << 1, 0;
    const KklTarget tgt = default_kkl_target({2}, iobs::lti::TimeKind::CT, 2.0);
    const Matrix A = tgt.A();
    const Matrix& B = tgt.B;

    Matrix T = Matrix::Zero(2, 2);
    const double hstep = 1e-3;
    for (int k = 0; k < 20000; ++k) {
        const Matrix k1 = t_dynamics_rhs(T, f, h, A, B);
        const Matrix k2 = t_dynamics_rhs(T + hstep / 2 * k1, f, h, A, B);
        const Matrix k3 = t_dynamics_rhs(T + hstep / 2 * k2, f, h, A, B);
        const Matrix k4 = t_dynamics_rhs(T + hstep * k3, f, h, A, B);
        T += hstep / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const Matrix T_stat = mo::solve_sylvester(A, f, B * h);
    CHECK((T - T_stat).cwiseAbs().maxCoeff() < 1e-6);
}
