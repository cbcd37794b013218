#include "iobs/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace iobs::config {

namespace {

using json = nlohmann::json;
using expr::Expr;
using expr::TimeSymbol;
using matops::Matrix;
using matops::Vector;

using ExprMatrix = std::vector<std::vector<Expr>>;
using ExprVector = std::vector<Expr>;

std::string idx2(const std::string& base, size_t i, size_t j) {
    return base + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

std::string idx1(const std::string& base, size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

Expr parse_entry(const json& v, const std::string& path, TimeSymbol sym) {
    if (v.is_number())
        return Expr::constant(v.get<double>());
    if (v.is_string()) {
        try {
            return Expr::parse(v.get<std::string>(), sym);
        } catch (const expr::ParseError& e) {
            throw ConfigError(path, e.what());
        }
    }
    throw ConfigError(path, "expected a number or an expression string");
}

ExprMatrix parse_matrix(const json& v, const std::string& path, TimeSymbol sym) {
    if (!v.is_array() || v.empty())
        throw ConfigError(path, "expected a non-empty array of rows");
    ExprMatrix m;
    size_t cols = 0;
    for (size_t i = 0; i < v.size(); ++i) {
        const json& row = v[i];
        if (!row.is_array() || row.empty())
            throw ConfigError(idx1(path, i), "expected a non-empty row array");
        if (i == 0)
            cols = row.size();
        else if (row.size() != cols)
            throw ConfigError(idx1(path, i), "ragged matrix rows");
        std::vector<Expr> out;
        for (size_t j = 0; j < row.size(); ++j)
            out.push_back(parse_entry(row[j], idx2(path, i, j), sym));
        m.push_back(std::move(out));
    }
    return m;
}

ExprVector parse_vector(const json& v, const std::string& path, TimeSymbol sym) {
    if (!v.is_array())
        throw ConfigError(path, "expected an array");
    ExprVector out;
    for (size_t i = 0; i < v.size(); ++i)
        out.push_back(parse_entry(v[i], idx1(path, i), sym));
    return out;
}

Matrix eval_matrix(const ExprMatrix& m, double t, const std::string& path) {
    Matrix out(static_cast<Eigen::Index>(m.size()),
               static_cast<Eigen::Index>(m[0].size()));
    for (size_t i = 0; i < m.size(); ++i)
        for (size_t j = 0; j < m[i].size(); ++j) {
            try {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    m[i][j].eval(t);
            } catch (const expr::EvalError& e) {
                throw ConfigError(idx2(path, i, j),
                                  std::string(e.what()) + " at time " +
                                      std::to_string(t));
            }
        }
    return out;
}

Vector eval_vector(const ExprVector& v, double t, const std::string& path) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) {
        try {
            out(static_cast<Eigen::Index>(i)) = v[i].eval(t);
        } catch (const expr::EvalError& e) {
            throw ConfigError(idx1(path, i), std::string(e.what()) + " at time " +
                                                 std::to_string(t));
        }
    }
    return out;
}

Matrix require_constant_matrix(const ExprMatrix& m, const std::string& path) {
    for (size_t i = 0; i < m.size(); ++i)
        for (size_t j = 0; j < m[i].size(); ++j)
            if (!m[i][j].is_constant())
                throw ConfigError(idx2(path, i, j),
                                  "time-varying entry in a time-invariant plant");
    return eval_matrix(m, 0.0, path);
}

Vector numeric_vector(const json& v, const std::string& path) {
    if (!v.is_array())
        throw ConfigError(path, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError(idx1(path, i), "expected a number");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

Matrix numeric_matrix(const json& v, const std::string& path) {
    return require_constant_matrix(parse_matrix(v, path, TimeSymbol::T), path);
}

sim::Kind parse_kind(const json& root) {
    if (!root.contains("kind") || !root["kind"].is_string())
        throw ConfigError("kind", "missing or non-string");
    const std::string k = root["kind"].get<std::string>();
    if (k == "ct-lti") return sim::Kind::CtLti;
    if (k == "dt-lti") return sim::Kind::DtLti;
    if (k == "ct-ltv") return sim::Kind::CtLtv;
    if (k == "dt-ltv") return sim::Kind::DtLtv;
    throw ConfigError("kind", "must be one of ct-lti, dt-lti, ct-ltv, dt-ltv");
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key))
        throw ConfigError(path + (path.empty() ? "" : ".") + key, "missing");
    return obj[key];
}

struct SignalSet {
    ExprVector u, d, w, d_lo, d_hi, w_lo, w_hi;
};

// a constant zero signal of the given arity
ExprVector zeros(Eigen::Index n) {
    return ExprVector(static_cast<size_t>(n), Expr::constant(0.0));
}

SignalSet parse_signals(const json& root, TimeSymbol sym, Eigen::Index n_x,
                        Eigen::Index n_d, Eigen::Index n_w) {
    SignalSet s;
    const json sig = root.contains("signals") ? root["signals"] : json::object();
    auto get = [&](const char* key, Eigen::Index n) {
        if (!sig.contains(key))
            return zeros(n);
        auto v = parse_vector(sig[key], std::string("signals.") + key, sym);
        if (static_cast<Eigen::Index>(v.size()) != n)
            throw ConfigError(std::string("signals.") + key,
                              "expected length " + std::to_string(n));
        return v;
    };
    s.u = get("u", n_x);
    s.d = get("d", n_d);
    s.w = get("w", n_w);

    auto get_bounds = [&](const char* key, Eigen::Index n, ExprVector& lo,
                          ExprVector& hi) {
        if (!sig.contains(key)) {
            lo = zeros(n);
            hi = zeros(n);
            return;
        }
        const json& b = sig[key];
        const std::string base = std::string("signals.") + key;
        lo = parse_vector(require(b, "lo", base), base + ".lo", sym);
        hi = parse_vector(require(b, "hi", base), base + ".hi", sym);
        if (static_cast<Eigen::Index>(lo.size()) != n ||
            static_cast<Eigen::Index>(hi.size()) != n)
            throw ConfigError(base, "expected length " + std::to_string(n));
    };
    get_bounds("d_bounds", n_d, s.d_lo, s.d_hi);
    get_bounds("w_bounds", n_w, s.w_lo, s.w_hi);
    return s;
}

ConfigDocument parse_document(const json& root) {
    ConfigDocument doc;
    sim::Scenario& sc = doc.scenario;
    sc.kind = parse_kind(root);
    doc.kind_name = root["kind"].get<std::string>();
    const bool ct = sim::is_ct(sc.kind);
    const bool lti_kind = sim::is_lti(sc.kind);
    const TimeSymbol sym = ct ? TimeSymbol::T : TimeSymbol::K;

    const json& plant = require(root, "plant", "");
    auto fm = parse_matrix(require(plant, "F", "plant"), "plant.F", sym);
    auto hm = parse_matrix(require(plant, "H", "plant"), "plant.H", sym);
    const Eigen::Index n_x = static_cast<Eigen::Index>(fm.size());
    const Eigen::Index n_y = static_cast<Eigen::Index>(hm.size());
    if (static_cast<Eigen::Index>(fm[0].size()) != n_x)
        throw ConfigError("plant.F", "must be square");
    if (static_cast<Eigen::Index>(hm[0].size()) != n_x)
        throw ConfigError("plant.H", "column count must equal dim(F)");

    ExprMatrix dm, wm;
    if (plant.contains("D"))
        dm = parse_matrix(plant["D"], "plant.D", sym);
    if (plant.contains("W"))
        wm = parse_matrix(plant["W"], "plant.W", sym);
    const Eigen::Index n_d =
        dm.empty() ? 0 : static_cast<Eigen::Index>(dm[0].size());
    const Eigen::Index n_w =
        wm.empty() ? 0 : static_cast<Eigen::Index>(wm[0].size());
    if (!dm.empty() && static_cast<Eigen::Index>(dm.size()) != n_x)
        throw ConfigError("plant.D", "row count must equal dim(F)");
    if (!wm.empty() && static_cast<Eigen::Index>(wm.size()) != n_y)
        throw ConfigError("plant.W", "row count must equal rows(H)");

    if (lti_kind) {
        lti::LtiPlant p;
        p.time_kind = ct ? lti::TimeKind::CT : lti::TimeKind::DT;
        p.F = require_constant_matrix(fm, "plant.F");
        p.H = require_constant_matrix(hm, "plant.H");
        p.D = dm.empty() ? Matrix::Zero(n_x, 0)
                         : require_constant_matrix(dm, "plant.D");
        p.W = wm.empty() ? Matrix::Zero(n_y, 0)
                         : require_constant_matrix(wm, "plant.W");
        sc.lti_plant = p;
    } else {
        auto mat_fn = [](ExprMatrix m, std::string path) {
            return [m = std::move(m), path](double t) { return eval_matrix(m, t, path); };
        };
        auto empty_fn = [](Eigen::Index rows, Eigen::Index cols) {
            return [rows, cols](double) { return Matrix::Zero(rows, cols).eval(); };
        };
        if (ct) {
            sc.ct_plant.n_x = n_x;
            sc.ct_plant.n_y = n_y;
            sc.ct_plant.n_d = n_d;
            sc.ct_plant.n_w = n_w;
            sc.ct_plant.F = mat_fn(std::move(fm), "plant.F");
            sc.ct_plant.H = mat_fn(std::move(hm), "plant.H");
            sc.ct_plant.D = dm.empty() ? ltv_ct::MatrixFn(empty_fn(n_x, 0))
                                       : mat_fn(std::move(dm), "plant.D");
            sc.ct_plant.W = wm.empty() ? ltv_ct::MatrixFn(empty_fn(n_y, 0))
                                       : mat_fn(std::move(wm), "plant.W");
        } else {
            auto as_seq = [](ltv_ct::MatrixFn f) {
                return [f = std::move(f)](Eigen::Index k) {
                    return f(static_cast<double>(k));
                };
            };
            sc.dt_plant.n_x = n_x;
            sc.dt_plant.n_y = n_y;
            sc.dt_plant.n_d = n_d;
            sc.dt_plant.n_w = n_w;
            sc.dt_plant.F = as_seq(mat_fn(std::move(fm), "plant.F"));
            sc.dt_plant.H = as_seq(mat_fn(std::move(hm), "plant.H"));
            sc.dt_plant.D = dm.empty() ? ltv_dt::MatrixSeq(as_seq(empty_fn(n_x, 0)))
                                       : as_seq(mat_fn(std::move(dm), "plant.D"));
            sc.dt_plant.W = wm.empty() ? ltv_dt::MatrixSeq(as_seq(empty_fn(n_y, 0)))
                                       : as_seq(mat_fn(std::move(wm), "plant.W"));
        }
    }

    // target
    const json& target = require(root, "target", "");
    if (lti_kind) {
        if (target.is_string() && target.get<std::string>() == "auto") {
            const auto avoid = matops::eigenvalues(sc.lti_plant.F);
            std::tie(sc.A, sc.B) = lti::default_target(
                n_x, n_y, sc.lti_plant.time_kind, avoid);
        } else if (target.is_object()) {
            sc.A = numeric_matrix(require(target, "A", "target"), "target.A");
            sc.B = numeric_matrix(require(target, "B", "target"), "target.B");
            doc.explicit_target = true;
        } else {
            throw ConfigError("target", "expected \"auto\" or an {A,B} object");
        }
        if (sc.A.rows() != n_x || sc.A.cols() != n_x)
            throw ConfigError("target.A", "must be n_x x n_x");
        if (sc.B.rows() != n_x || sc.B.cols() != n_y)
            throw ConfigError("target.B", "must be n_x x n_y");
    } else {
        if (!target.is_object() || !target.contains("blocks"))
            throw ConfigError("target", "LTV target needs {blocks, gain, ...}");
        const json& blocks = target["blocks"];
        if (!blocks.is_array() ||
            static_cast<Eigen::Index>(blocks.size()) != n_y)
            throw ConfigError("target.blocks", "expected one block dim per output");
        std::vector<Eigen::Index> dims;
        for (size_t i = 0; i < blocks.size(); ++i) {
            if (!blocks[i].is_number_integer() || blocks[i].get<long>() < 1)
                throw ConfigError(idx1("target.blocks", i),
                                  "expected a positive integer");
            dims.push_back(blocks[i].get<long>());
        }
        doc.m_list = dims;
        const double gain =
            target.contains("gain") ? target["gain"].get<double>() : 1.0;
        const lti::TimeKind tk = ct ? lti::TimeKind::CT : lti::TimeKind::DT;
        if (target.contains("A_tilde") || target.contains("B")) {
            ltv_ct::KklTarget t;
            t.block_dims = dims;
            t.gain = gain;
            t.A_tilde =
                numeric_matrix(require(target, "A_tilde", "target"), "target.A_tilde");
            t.B = numeric_matrix(require(target, "B", "target"), "target.B");
            try {
                t.validate(tk);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("target", e.what());
            }
            sc.kkl = t;
            doc.explicit_target = true;
        } else {
            sc.kkl = ltv_ct::default_kkl_target(dims, tk, gain);
        }
        if (target.contains("T0"))
            sc.T0 = numeric_matrix(target["T0"], "target.T0");
    }

    // signals
    SignalSet sig = parse_signals(root, sym, n_x, n_d, n_w);
    auto vec_fn = [](ExprVector v, std::string path) -> sim::VectorFn {
        return [v = std::move(v), path](double t) { return eval_vector(v, t, path); };
    };
    sc.u = vec_fn(std::move(sig.u), "signals.u");
    sc.d = vec_fn(std::move(sig.d), "signals.d");
    sc.w = vec_fn(std::move(sig.w), "signals.w");
    sc.d_lo = vec_fn(std::move(sig.d_lo), "signals.d_bounds.lo");
    sc.d_hi = vec_fn(std::move(sig.d_hi), "signals.d_bounds.hi");
    sc.w_lo = vec_fn(std::move(sig.w_lo), "signals.w_bounds.lo");
    sc.w_hi = vec_fn(std::move(sig.w_hi), "signals.w_bounds.hi");

    // x0
    const json& x0 = require(root, "x0", "");
    sc.x0 = numeric_vector(require(x0, "value", "x0"), "x0.value");
    sc.x0_lo = numeric_vector(require(x0, "lo", "x0"), "x0.lo");
    sc.x0_hi = numeric_vector(require(x0, "hi", "x0"), "x0.hi");
    if (sc.x0.size() != n_x || sc.x0_lo.size() != n_x || sc.x0_hi.size() != n_x)
        throw ConfigError("x0", "vectors must have length n_x");
    for (Eigen::Index i = 0; i < n_x; ++i)
        if (sc.x0_lo(i) > sc.x0_hi(i))
            throw ConfigError(idx1("x0.lo", static_cast<size_t>(i)),
                              "lo > hi");

    // sim
    const json& simj = require(root, "sim", "");
    sc.horizon = require(simj, "horizon", "sim").get<double>();
    if (sc.horizon < 0.0)
        throw ConfigError("sim.horizon", "must be >= 0");
    if (ct) {
        sc.step = simj.contains("step") ? simj["step"].get<double>() : 1e-3;
        if (sc.step <= 0.0)
            throw ConfigError("sim.step", "must be > 0");
    }
    if (simj.contains("observer")) {
        const std::string f = simj["observer"].get<std::string>();
        if (f == "z")
            sc.observer_form = sim::ObserverForm::Z;
        else if (f == "x")
            sc.observer_form = sim::ObserverForm::X;
        else
            throw ConfigError("sim.observer", "must be \"z\" or \"x\"");
        if (!lti_kind && sc.observer_form == sim::ObserverForm::X)
            throw ConfigError("sim.observer",
                              "x-form observer is only defined for LTI kinds");
    }
    if (simj.contains("slack"))
        sc.slack = simj["slack"].get<double>();
    if (simj.contains("c_T"))
        sc.c_T_override = simj["c_T"].get<double>();
    if (simj.contains("seed"))
        sc.seed = simj["seed"].get<std::uint64_t>();

    // output
    if (root.contains("output")) {
        const json& out = root["output"];
        if (out.contains("csv"))
            doc.csv_path = out["csv"].get<std::string>();
        if (out.contains("report"))
            doc.report_path = out["report"].get<std::string>();
    }
    return doc;
}

}  // namespace

ConfigDocument load_string(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin, std::string("JSON parse error: ") + e.what());
    }
    try {
        return parse_document(root);
    } catch (const json::exception& e) {
        throw ConfigError(origin, std::string("schema error: ") + e.what());
    }
}

ConfigDocument load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path, "cannot open config file");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return load_string(text, path);
}

}  // namespace iobs::config
