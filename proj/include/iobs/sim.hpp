#pragma once

#include "iobs/ltv_dt.hpp"

#include <cstdint>
#include <optional>

namespace iobs::sim {

using interval::IntervalVector;
using matops::Matrix;
using matops::Vector;

using VectorFn = std::function<Vector(double)>;

enum class Kind { CtLti, DtLti, CtLtv, DtLtv };

inline bool is_ct(Kind k) { return k == Kind::CtLti || k == Kind::CtLtv; }
inline bool is_lti(Kind k) { return k == Kind::CtLti || k == Kind::DtLti; }

enum class ObserverForm { Z, X };

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(double time, const std::string& what_part)
        : std::runtime_error("non-finite state in " + what_part + " at time " +
                             std::to_string(time)),
          time_(time) {}
    double time() const { return time_; }

private:
    double time_ = 0.0;
};

struct Scenario {
    Kind kind = Kind::CtLti;

    // LTI plants and target (explicit or resolved from "auto")
    lti::LtiPlant lti_plant;
    Matrix A, B;

    // LTV plants and KKL target
    ltv_ct::CtLtvPlant ct_plant;
    ltv_dt::DtLtvPlant dt_plant;
    ltv_ct::KklTarget kkl;
    std::optional<Matrix> T0;  // defaults to zero

    // truth signals and declared bounds
    VectorFn u, d, w;
    VectorFn d_lo, d_hi, w_lo, w_hi;

    Vector x0;
    Vector x0_lo, x0_hi;

    double horizon = 1.0;   // CT time span / DT step count
    double step = 1e-3;     // CT only
    std::uint64_t seed = 0;
    ObserverForm observer_form = ObserverForm::Z;
    std::optional<double> slack;          // containment slack override
    std::optional<double> c_T_override;   // t*/k* threshold override

    Eigen::Index nx() const;
    double containment_slack() const;
};

struct SimulationTrace {
    Kind kind = Kind::CtLti;
    Eigen::Index n_x = 0, n_z = 0;

    std::vector<double> times;
    std::vector<Vector> x, x_lo, x_hi, z_lo, z_hi;
    std::vector<double> sigma_min;
    std::vector<char> contained, z_contained, verified;
    std::vector<double> width_x;
    std::vector<Matrix> T_traj;  // LTV only; entries flattened column-major in CSV

    bool t_star_reached = false;
    double t_star = 0.0;
    Eigen::Index t_star_index = 0;
    double c_T = 0.0;
    double max_violation_x = 0.0;  // worst relative overshoot, post t*/k*
    double max_violation_z = std::numeric_limits<double>::lowest();  // whole run
    double final_width = 0.0;
    double slack_used = 0.0;

    bool containment_ok() const;  // contained at every verified grid point
};

// Rejects scenarios whose truth signals leave the declared bounds; messages
// carry a config-style path (signals.d, signals.w, x0.value).
void validate_truth_in_bounds(const Scenario& s);

SimulationTrace simulate_ct(const Scenario& s);
SimulationTrace simulate_dt(const Scenario& s);
SimulationTrace simulate(const Scenario& s);

}  // namespace iobs::sim
