#include "iobs/commands.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace iobs::commands {

namespace {

using json = nlohmann::ordered_json;
using matops::Matrix;
using matops::Vector;

bool log_enabled() {
    const char* v = std::getenv("IOBS_LOG");
    return v != nullptr && *v != '\0' && std::string(v) != "0";
}

void log(const std::string& msg) {
    if (log_enabled()) {
        static std::mutex mu;
        std::lock_guard<std::mutex> lock(mu);
        std::cerr << "[iobs] " << msg << "\n";
    }
}

// 17 significant digits: doubles round-trip exactly
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string stem_of(const std::string& path) {
    const size_t slash = path.find_last_of("/\\");
    const size_t start = slash == std::string::npos ? 0 : slash + 1;
    const size_t dot = path.find_last_of('.');
    if (dot != std::string::npos && dot > start)
        return path.substr(0, dot);
    return path;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

struct Check {
    std::string name;
    bool hard = true;
    bool pass = false;
    std::string detail;
};

json checks_json(const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        json e;
        e["name"] = c.name;
        e["hard"] = c.hard;
        e["pass"] = c.pass;
        e["detail"] = c.detail;
        arr.push_back(std::move(e));
    }
    return arr;
}

void print_checks(const std::vector<Check>& checks, std::ostream& out) {
    for (const auto& c : checks)
        out << (c.pass ? "PASS" : (c.hard ? "FAIL" : "WARN")) << "  " << c.name
            << (c.detail.empty() ? "" : "  [" + c.detail + "]") << "\n";
}

std::vector<Check> run_checks(const config::ConfigDocument& doc) {
    std::vector<Check> checks;
    const sim::Scenario& sc = doc.scenario;
    auto add = [&](std::string name, bool pass, std::string detail, bool hard = true) {
        checks.push_back({std::move(name), hard, pass, std::move(detail)});
    };

    if (sim::is_lti(sc.kind)) {
        const auto& p = sc.lti_plant;
        const bool obs = matops::is_observable(p.F, p.H);
        add("NotObservable: pair (F,H) observable", obs,
            obs ? "" : "NotObservable");

        const auto cert = matops::certify(sc.A);
        const bool ct = p.time_kind == lti::TimeKind::CT;
        const bool structure = ct ? (cert.max_real_part < 0.0 && cert.is_metzler)
                                  : (cert.spectral_radius < 1.0 && cert.is_nonnegative);
        add(ct ? "target A Hurwitz and Metzler" : "target A Schur and non-negative",
            structure,
            ct ? "max Re = " + num(cert.max_real_part)
               : "rho = " + num(cert.spectral_radius));

        add("pair (A,B) controllable", matops::is_controllable(sc.A, sc.B), "");
        add("spectra of A and F disjoint", matops::spectra_disjoint(sc.A, p.F),
            "gap = " + num(matops::spectral_gap(sc.A, p.F)));

        bool all_ok = true;
        for (const auto& c : checks)
            if (c.hard && !c.pass)
                all_ok = false;
        if (all_ok) {
            try {
                const auto d = lti::design_lti(p, sc.A, sc.B);
                add("Sylvester residual small", d.sylvester_residual < 1e-10,
                    "residual = " + num(d.sylvester_residual));
                add("T invertible", true, "sigma_min = " + num(d.sigma_min_T) +
                                              ", cond = " + num(d.cond_T));
                add("cond(T) below 1e8", d.cond_T < 1e8,
                    "cond = " + num(d.cond_T), /*hard=*/false);
            } catch (const lti::DesignError& e) {
                add(std::string("design: ") + e.name(), false, e.what());
            }
        }
    } else if (sc.kind == sim::Kind::CtLtv) {
        const auto& p = sc.ct_plant;
        const long n_grid = 200;
        std::vector<double> grid;
        double fmax = 0.0, hmax = 0.0;
        for (long i = 0; i <= n_grid; ++i) {
            const double t = sc.horizon * static_cast<double>(i) /
                             static_cast<double>(n_grid);
            grid.push_back(t);
            fmax = std::max(fmax, p.F(t).norm());
            hmax = std::max(hmax, p.H(t).norm());
        }
        add("F(t), H(t) bounded on grid", std::isfinite(fmax) && std::isfinite(hmax),
            "max ||F|| = " + num(fmax) + ", max ||H|| = " + num(hmax));
        const double fd = std::max(sc.step, 1e-4);
        const auto rep =
            ltv_ct::empirical_observability_check(p, doc.m_list, grid, fd);
        add("instantaneous observability (empirical)", rep.positive,
            "c_o estimate = " + num(rep.c_o_estimate) + " at t = " +
                num(rep.worst_time),
            /*hard=*/false);
        add("gain positive", sc.kkl.gain > 0.0, "gain = " + num(sc.kkl.gain));
    } else {  // DtLtv
        const auto& p = sc.dt_plant;
        Eigen::Index m_max = 0;
        for (auto m : doc.m_list) m_max = std::max(m_max, m);
        const Eigen::Index k_hi = std::max<Eigen::Index>(
            m_max, std::min<Eigen::Index>(std::lround(sc.horizon), 100));
        try {
            const auto rep = ltv_dt::uco_check(p, doc.m_list, m_max, k_hi);
            add("uniform complete observability", rep.positive,
                "c_o estimate = " + num(rep.c_o_estimate) + " over k in [" +
                    std::to_string(m_max) + "," + std::to_string(k_hi) + "]");
        } catch (const ltv_dt::SingularFk& e) {
            add("F_k invertible", false, e.what());
        }
        add("gain in (0,1]", sc.kkl.gain > 0.0 && sc.kkl.gain <= 1.0,
            "gamma = " + num(sc.kkl.gain));
    }
    return checks;
}

std::string default_csv_path(const std::string& config_path) {
    return stem_of(config_path) + ".csv";
}

std::string default_report_path(const std::string& config_path) {
    return stem_of(config_path) + ".report.json";
}

int simulate_one(const std::string& config_path, const std::string& csv_override,
                 const std::string& report_override, const std::string& plot_script,
                 std::ostream& out, std::mutex& out_mu) {
    config::ConfigDocument doc;
    try {
        doc = config::load_file(config_path);
    } catch (const config::ConfigError& e) {
        std::lock_guard<std::mutex> lock(out_mu);
        out << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    sim::SimulationTrace tr;
    try {
        log("simulate " + config_path);
        tr = sim::simulate(doc.scenario);
    } catch (const sim::ValidationError& e) {
        std::lock_guard<std::mutex> lock(out_mu);
        out << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const config::ConfigError& e) {
        std::lock_guard<std::mutex> lock(out_mu);
        out << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const sim::NonFiniteState& e) {
        std::lock_guard<std::mutex> lock(out_mu);
        out << "simulation failed: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(out_mu);
        out << "simulation failed: " << e.what() << "\n";
        return kExitCheckFailed;
    }

    const std::string csv_path =
        csv_override.empty()
            ? (doc.csv_path.empty() ? default_csv_path(config_path) : doc.csv_path)
            : csv_override;
    const std::string report_path =
        report_override.empty() ? (doc.report_path.empty()
                                       ? default_report_path(config_path)
                                       : doc.report_path)
                                : report_override;

    write_csv(tr, csv_path);
    write_text(report_path, make_report(tr, doc.kind_name));
    if (!plot_script.empty())
        write_plot_script(tr, csv_path, plot_script);

    const bool ok = tr.t_star_reached && tr.containment_ok();
    {
        std::lock_guard<std::mutex> lock(out_mu);
        out << config_path << ": " << (ok ? "ok" : "containment not guaranteed")
            << ", csv = " << csv_path << ", report = " << report_path << "\n";
    }
    return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

void write_csv(const sim::SimulationTrace& tr, const std::string& path) {
    std::ostringstream os;
    auto col = [&](const std::string& base, Eigen::Index n) {
        for (Eigen::Index i = 1; i <= n; ++i) os << "," << base << "_" << i;
    };
    os << "time";
    col("x", tr.n_x);
    col("xlo", tr.n_x);
    col("xhi", tr.n_x);
    col("zlo", tr.n_z);
    col("zhi", tr.n_z);
    os << ",sigma_min,contained,z_contained\r\n";
    for (size_t r = 0; r < tr.times.size(); ++r) {
        os << num(tr.times[r]);
        auto vec = [&](const Vector& v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) os << "," << num(v(i));
        };
        vec(tr.x[r]);
        vec(tr.x_lo[r]);
        vec(tr.x_hi[r]);
        vec(tr.z_lo[r]);
        vec(tr.z_hi[r]);
        os << "," << num(tr.sigma_min[r]) << "," << int(tr.contained[r]) << ","
           << int(tr.z_contained[r]) << "\r\n";
    }
    write_text(path, os.str());
}

std::string make_report(const sim::SimulationTrace& tr, const std::string& kind_name) {
    json rep;
    rep["kind"] = kind_name;
    rep["n_x"] = tr.n_x;
    rep["n_z"] = tr.n_z;
    rep["rows"] = tr.times.size();
    json tstar;
    tstar["reached"] = tr.t_star_reached;
    tstar["value"] = tr.t_star_reached ? json(tr.t_star) : json(nullptr);
    tstar["index"] = tr.t_star_reached ? json(tr.t_star_index) : json(nullptr);
    rep["t_star"] = std::move(tstar);
    rep["c_T"] = tr.c_T;
    rep["sigma_min_final"] = tr.sigma_min.empty() ? 0.0 : tr.sigma_min.back();
    const bool any_verified = tr.t_star_reached && !tr.times.empty();
    rep["max_violation_x"] = any_verified ? json(tr.max_violation_x) : json(nullptr);
    rep["max_violation_z"] =
        tr.times.empty() ? json(nullptr) : json(tr.max_violation_z);
    rep["final_width"] = tr.final_width;
    rep["slack"] = tr.slack_used;
    rep["containment_ok"] = tr.containment_ok();
    bool z_ok = true;
    for (char c : tr.z_contained)
        if (!c)
            z_ok = false;
    rep["z_containment_ok"] = z_ok;
    rep["t_layout"] = "column-major";
    return rep.dump(2) + "\n";
}

void write_plot_script(const sim::SimulationTrace& tr, const std::string& csv_path,
                       const std::string& script_path) {
    std::ostringstream os;
    os << "# gnuplot template: state bounds vs truth\n";
    os << "set datafile separator ','\n";
    os << "set key outside\n";
    for (Eigen::Index i = 1; i <= tr.n_x; ++i) {
        const Eigen::Index cx = 1 + i;
        const Eigen::Index clo = 1 + tr.n_x + i;
        const Eigen::Index chi = 1 + 2 * tr.n_x + i;
        os << (i == 1 ? "plot" : "replot") << " '" << csv_path << "' using 1:" << cx
           << " with lines title 'x_" << i << "', '' using 1:" << clo
           << " with lines dt 2 title 'xlo_" << i << "', '' using 1:" << chi
           << " with lines dt 2 title 'xhi_" << i << "'\n";
        if (i == 1)
            os << "pause -1\n";
    }
    write_text(script_path, os.str());
}

int cmd_check(const std::string& config_path, const std::string& report_path,
              std::ostream& out) {
    config::ConfigDocument doc;
    try {
        doc = config::load_file(config_path);
    } catch (const config::ConfigError& e) {
        out << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    std::vector<Check> checks;
    try {
        checks = run_checks(doc);
    } catch (const std::exception& e) {
        out << "check failed to run: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    print_checks(checks, out);
    bool ok = true;
    for (const auto& c : checks)
        if (c.hard && !c.pass)
            ok = false;
    if (!report_path.empty()) {
        json rep;
        rep["config"] = config_path;
        rep["kind"] = doc.kind_name;
        rep["pass"] = ok;
        rep["checks"] = checks_json(checks);
        write_text(report_path, rep.dump(2) + "\n");
    }
    out << (ok ? "all checks passed" : "hard check failed") << "\n";
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_design(const std::string& config_path, const std::string& artifact_path,
               std::ostream& out) {
    config::ConfigDocument doc;
    try {
        doc = config::load_file(config_path);
    } catch (const config::ConfigError& e) {
        out << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    if (!sim::is_lti(doc.scenario.kind)) {
        out << "config error: design is trajectory-valued for LTV kinds; use "
               "simulate\n";
        return kExitConfigError;
    }
    lti::LtiDesign d;
    try {
        d = lti::design_lti(doc.scenario.lti_plant, doc.scenario.A, doc.scenario.B);
    } catch (const lti::DesignError& e) {
        out << "design failed: " << e.name() << ": " << e.what() << "\n";
        return kExitCheckFailed;
    }
    json art;
    art["kind"] = doc.kind_name;
    art["A"] = matrix_json(d.A);
    art["B"] = matrix_json(d.B);
    art["T"] = matrix_json(d.T);
    art["T_inv"] = matrix_json(d.T_inv);
    json cert;
    cert["max_real_part"] = d.cert_A.max_real_part;
    cert["spectral_radius"] = d.cert_A.spectral_radius;
    cert["is_metzler"] = d.cert_A.is_metzler;
    cert["is_nonnegative"] = d.cert_A.is_nonnegative;
    cert["observable"] = d.observable;
    cert["controllable"] = d.controllable;
    cert["sylvester_residual"] = d.sylvester_residual;
    cert["sigma_min_T"] = d.sigma_min_T;
    cert["cond_T"] = d.cond_T;
    cert["b_redraws"] = d.b_redraws;
    art["certificates"] = std::move(cert);
    write_text(artifact_path, art.dump(2) + "\n");
    out << "design written to " << artifact_path
        << " (residual = " << num(d.sylvester_residual) << ")\n";
    return kExitOk;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out) {
    if (opts.config_paths.empty()) {
        out << "config error: no config files given\n";
        return kExitConfigError;
    }
    if (opts.config_paths.size() > 1 &&
        (!opts.csv_override.empty() || !opts.report_override.empty())) {
        out << "config error: -o/--report require a single config\n";
        return kExitConfigError;
    }

    std::mutex out_mu;
    const int jobs = std::max(1, opts.jobs);
    std::vector<int> codes(opts.config_paths.size(), kExitOk);
    if (jobs == 1 || opts.config_paths.size() == 1) {
        for (size_t i = 0; i < opts.config_paths.size(); ++i)
            codes[i] = simulate_one(opts.config_paths[i], opts.csv_override,
                                    opts.report_override, opts.plot_script, out,
                                    out_mu);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= opts.config_paths.size())
                        return;
                    codes[i] = simulate_one(opts.config_paths[i], "", "", "", out,
                                            out_mu);
                }
            });
        for (auto& th : pool) th.join();
    }
    int worst = kExitOk;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

}  // namespace iobs::commands
