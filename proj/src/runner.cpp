#include "degpar/runner.hpp"

#include "degpar/criteria.hpp"
#include "degpar/error.hpp"
#include "degpar/suite.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace degpar {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw Error(ErrorKind::config, key + ": " + what);
}

// Error::what() carries the kind as a prefix; drop it before re-wrapping.
std::string bare(const Error& e) {
    const std::string what = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) fail(where + "." + key, "unknown key");
    }
}

double number(const json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return kInfinity;
        if (s == "-inf") return -kInfinity;
    }
    fail(key, "expected a number");
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
    return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

int integer(const json& v, const std::string& key) {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
}

std::vector<double> number_list(const json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) fail(key, "expected a non-empty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

TimeSupport support_of(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) fail(key, "expected [t0, t1] (t1 may be null)");
    TimeSupport s;
    s.begin = number(v[0], key + "[0]");
    s.end = v[1].is_null() ? kInfinity : number(v[1], key + "[1]");
    return s;
}

TimeBasis basis_of(const json& term, const std::string& key) {
    const std::string kind = term.value("kind", "constant");
    if (kind == "constant") return constant_basis();
    if (kind == "monomial") {
        if (!term.contains("exponent")) fail(key + ".exponent", "required for monomial terms");
        return monomial_basis(integer(term.at("exponent"), key + ".exponent"));
    }
    if (kind == "power") {
        if (!term.contains("exponent")) fail(key + ".exponent", "required for power terms");
        return power_basis(number(term.at("exponent"), key + ".exponent"));
    }
    if (kind == "cos" || kind == "sin") {
        if (!term.contains("frequency")) fail(key + ".frequency", "required for cos/sin terms");
        const double omega = number(term.at("frequency"), key + ".frequency");
        return kind == "cos" ? cosine_basis(omega) : sine_basis(omega);
    }
    fail(key + ".kind", "unknown kind '" + kind + "'");
}

Matrix matrix_of(const json& v, int d, const std::string& key) {
    if (v.is_number()) return v.get<double>() * Matrix::Identity(d, d);
    if (!v.is_array()) fail(key, "expected a scalar, a d x d nested list or a flat list of d*d numbers");
    Matrix m(d, d);
    if (v.size() == static_cast<std::size_t>(d) && v[0].is_array()) {
        for (int i = 0; i < d; ++i) {
            if (!v[i].is_array() || v[i].size() != static_cast<std::size_t>(d)) fail(key, "row length must be d");
            for (int j = 0; j < d; ++j) m(i, j) = number(v[i][j], key);
        }
        return m;
    }
    if (v.size() != static_cast<std::size_t>(d * d)) fail(key, "expected d*d entries");
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = number(v[i * d + j], key);
    }
    return m;
}

Vector vector_of(const json& v, int d, const std::string& key) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(d)) fail(key, "expected a list of d numbers");
    Vector out(d);
    for (int i = 0; i < d; ++i) out(i) = number(v[i], key);
    return out;
}

CoefficientProfile custom_profile(const json& spec, int d, double horizon, const std::string& key) {
    check_keys(spec, key, {"id", "terms"});
    const std::string id = spec.value("id", key);
    if (!spec.contains("terms") || !spec.at("terms").is_array()) fail(key + ".terms", "expected a list of terms");
    std::vector<MatrixTerm> a;
    std::vector<VectorTerm> b;
    std::vector<ScalarTerm> c;
    const auto& terms = spec.at("terms");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tk = key + ".terms[" + std::to_string(i) + "]";
        const auto& term = terms[i];
        check_keys(term, tk, {"target", "kind", "coefficient", "exponent", "frequency", "support"});
        const TimeBasis basis = basis_of(term, tk);
        const TimeSupport support = term.contains("support") ? support_of(term.at("support"), tk + ".support") : TimeSupport{};
        if (!term.contains("coefficient")) fail(tk + ".coefficient", "required");
        const std::string target = term.value("target", "");
        const auto& coef = term.at("coefficient");
        if (target == "a") {
            a.push_back({basis, support, matrix_of(coef, d, tk + ".coefficient")});
        } else if (target == "b") {
            b.push_back({basis, support, vector_of(coef, d, tk + ".coefficient")});
        } else if (target == "c") {
            c.push_back({basis, support, number(coef, tk + ".coefficient")});
        } else {
            fail(tk + ".target", "must be one of a, b, c");
        }
    }
    try {
        return CoefficientProfile(d, horizon, std::move(a), std::move(b), std::move(c), id);
    } catch (const Error& e) {
        fail(key, bare(e));
    }
}

LowerOrder lower_order_of(const std::string& v, const std::string& key) {
    if (v == "none") return LowerOrder::none;
    if (v == "growth") return LowerOrder::growth;
    if (v == "decay") return LowerOrder::decay;
    fail(key, "must be none, growth or decay");
}

Forcing forcing_of(const json& spec, int d, const std::string& key) {
    std::vector<ForcingComponent> components;
    const auto& list = spec.at("components");
    if (!list.is_array()) fail(key + ".components", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string ck = key + ".components[" + std::to_string(i) + "]";
        const auto& c = list[i];
        check_keys(c, ck, {"amplitude", "center", "variance", "window", "exponent", "scale"});
        ForcingComponent comp;
        comp.bump.amplitude = number_or(c, "amplitude", 1.0, ck);
        comp.bump.variance = number_or(c, "variance", 1.0, ck);
        if (c.contains("center")) {
            const Vector center = vector_of(c.at("center"), d, ck + ".center");
            for (int j = 0; j < d; ++j) comp.bump.center[j] = center(j);
        }
        if (c.contains("window")) comp.time.window = support_of(c.at("window"), ck + ".window");
        comp.time.exponent = number_or(c, "exponent", 0.0, ck);
        comp.time.scale = number_or(c, "scale", 1.0, ck);
        components.push_back(comp);
    }
    try {
        return Forcing(d, std::move(components));
    } catch (const Error& e) {
        fail(key, bare(e));
    }
}

std::string resolve(const std::string& base, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base) / p).string();
}

bool power_of_two(int n) { return n >= 4 && (n & (n - 1)) == 0; }

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "config", {"dimension", "horizon", "suite", "variants", "profiles", "forcing", "grid",
                                "parameters", "weight", "eps_schedule", "aq_levels", "tolerance",
                                "holder_epsilon", "mc", "rescaling", "output"});
    ExperimentConfig cfg;
    cfg.source = root.dump();
    try {
        cfg.dimension = root.contains("dimension") ? integer(root.at("dimension"), "dimension") : 2;
        if (cfg.dimension < 1 || cfg.dimension > 3) fail("dimension", "must be 1, 2 or 3");
        cfg.horizon = number_or(root, "horizon", 1.0, "config");
        if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) fail("horizon", "must be positive");

        // profiles
        if (root.contains("suite")) {
            if (root.at("suite") != "canonical") fail("suite", "only \"canonical\" is defined");
            if (cfg.dimension != 2) fail("suite", "the canonical suite has dimension 2");
            cfg.profiles = canonical_suite(cfg.horizon, root.value("variants", true));
        }
        if (root.contains("profiles")) {
            const auto& list = root.at("profiles");
            if (!list.is_array()) fail("profiles", "expected a list");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string key = "profiles[" + std::to_string(i) + "]";
                const auto& spec = list[i];
                if (spec.contains("canonical")) {
                    check_keys(spec, key, {"canonical", "lower_order"});
                    if (cfg.dimension != 2) fail(key, "canonical profiles have dimension 2");
                    auto base = canonical_profile(spec.at("canonical").get<std::string>(), cfg.horizon);
                    cfg.profiles.push_back(with_lower_order(
                        base, lower_order_of(spec.value("lower_order", "none"), key + ".lower_order")));
                } else {
                    cfg.profiles.push_back(custom_profile(spec, cfg.dimension, cfg.horizon, key));
                }
            }
        }
        if (cfg.profiles.empty()) fail("profiles", "no profiles given (use \"suite\" or \"profiles\")");
        std::set<std::string> ids;
        for (const auto& p : cfg.profiles) {
            if (!ids.insert(p.id()).second) fail("profiles", "duplicate profile id '" + p.id() + "'");
        }

        // grid
        if (root.contains("grid")) {
            const auto& g = root.at("grid");
            check_keys(g, "grid", {"n", "halfwidth", "cells", "refine", "max_refinements"});
            if (g.contains("n")) cfg.n = integer(g.at("n"), "grid.n");
            if (g.contains("halfwidth") && !(g.at("halfwidth").is_string() && g.at("halfwidth") == "auto")) {
                cfg.halfwidth = number(g.at("halfwidth"), "grid.halfwidth");
                if (!(*cfg.halfwidth > 0.0)) fail("grid.halfwidth", "must be positive");
            }
            if (g.contains("cells")) cfg.cells = integer(g.at("cells"), "grid.cells");
            cfg.refine = g.value("refine", cfg.refine);
            if (g.contains("max_refinements")) cfg.max_refinements = integer(g.at("max_refinements"), "grid.max_refinements");
        }
        if (!power_of_two(cfg.n)) fail("grid.n", "must be a power of two >= 4");
        if (cfg.cells < 2 || cfg.cells % 2 != 0) fail("grid.cells", "must be even and >= 2");
        if (cfg.max_refinements < 0 || cfg.max_refinements > 6) fail("grid.max_refinements", "must lie in [0, 6]");

        // forcing
        if (!root.contains("forcing")) fail("forcing", "required");
        const auto& fspec = root.at("forcing");
        check_keys(fspec, "forcing", {"components", "periodize", "file", "sidecar", "zero"});
        if (fspec.value("zero", false)) {
            cfg.forcing = Forcing(cfg.dimension, {});
        } else if (fspec.contains("components")) {
            cfg.forcing = forcing_of(fspec, cfg.dimension, "forcing");
        } else if (fspec.contains("file")) {
            const std::string bin = resolve(base_dir, fspec.at("file").get<std::string>());
            const std::string side = fspec.contains("sidecar")
                                         ? resolve(base_dir, fspec.at("sidecar").get<std::string>())
                                         : bin + ".json";
            try {
                cfg.forcing_samples = read_field(bin, side);
            } catch (const Error& e) {
                fail("forcing.file", bare(e));
            }
            const Grid& g = cfg.forcing_samples->grid();
            if (g.dimension != cfg.dimension) fail("forcing.file", "dimension differs from config");
            TimeGrid tg;
            try {
                tg = midpoint_time_grid(*cfg.forcing_samples);
            } catch (const Error& e) {
                fail("forcing.file", bare(e));
            }
            if (std::abs(tg.horizon - cfg.horizon) > 1e-12 * cfg.horizon) fail("forcing.file", "time grid does not span [0, horizon]");
            cfg.n = g.n;
            cfg.halfwidth = g.halfwidth;
            cfg.cells = tg.cells;
            cfg.refine = false;
        } else {
            fail("forcing", "give components, file, or zero");
        }
        if (cfg.forcing && fspec.value("periodize", false)) {
            // resolved against the final box in run()
            cfg.forcing = cfg.forcing->periodized(1.0);
        }

        // parameters
        if (root.contains("parameters")) {
            const auto& par = root.at("parameters");
            check_keys(par, "parameters", {"p", "q", "beta_w"});
            if (par.contains("p")) cfg.ps = number_list(par.at("p"), "parameters.p");
            if (par.contains("q")) cfg.qs = number_list(par.at("q"), "parameters.q");
            if (par.contains("beta_w")) cfg.betas = number_list(par.at("beta_w"), "parameters.beta_w");
        }
        for (double p : cfg.ps) {
            if (!(p >= 1.0)) fail("parameters.p", "entries must lie in [1, inf]");
        }
        for (double q : cfg.qs) {
            if (!(q > 1.0) || !std::isfinite(q)) fail("parameters.q", "entries must lie in (1, inf)");
        }
        for (double q : cfg.qs) {
            for (double beta : cfg.betas) {
                try {
                    check_power_admissible(beta, q);
                } catch (const Error& e) {
                    throw Error(ErrorKind::admissibility, "parameters.beta_w: " + bare(e));
                }
            }
        }

        if (root.contains("weight")) {
            const auto& w = root.at("weight");
            check_keys(w, "weight", {"form", "beta", "amplitude", "samples"});
            const std::string form = w.value("form", "constant");
            if (form == "constant") {
                cfg.weight = Weight::constant();
            } else if (form == "power") {
                if (!w.contains("beta")) fail("weight.beta", "required for the power form");
                const double beta = number(w.at("beta"), "weight.beta");
                for (double q : cfg.qs) {
                    try {
                        check_power_admissible(beta, q);
                    } catch (const Error& e) {
                        throw Error(ErrorKind::admissibility, "weight.beta: " + bare(e));
                    }
                }
                cfg.weight = Weight::power(beta, number_or(w, "amplitude", 1.0, "weight"));
            } else if (form == "tabulated") {
                if (!w.contains("samples")) fail("weight.samples", "required for the tabulated form");
                try {
                    cfg.weight = Weight::from_csv(resolve(base_dir, w.at("samples").get<std::string>()));
                } catch (const Error& e) {
                    fail("weight.samples", bare(e));
                }
            } else {
                fail("weight.form", "must be constant, power or tabulated");
            }
        }

        if (root.contains("eps_schedule")) {
            const auto& e = root.at("eps_schedule");
            if (e.is_array()) {
                cfg.options.eps_schedule = number_list(e, "eps_schedule");
            } else {
                check_keys(e, "eps_schedule", {"start", "ratio", "count"});
                const double start = number_or(e, "start", 1.0, "eps_schedule");
                const double ratio = number_or(e, "ratio", 0.5, "eps_schedule");
                const int count = e.contains("count") ? integer(e.at("count"), "eps_schedule.count") : 21;
                if (!(start > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count < 3) {
                    fail("eps_schedule", "need start > 0, ratio in (0, 1), count >= 3");
                }
                cfg.options.eps_schedule.clear();
                for (int k = 0; k < count; ++k) cfg.options.eps_schedule.push_back(start * std::pow(ratio, k));
            }
            const auto& s = cfg.options.eps_schedule;
            for (std::size_t k = 0; k < s.size(); ++k) {
                if (!(s[k] > 0.0) || (k > 0 && !(s[k] < s[k - 1]))) {
                    fail("eps_schedule", "must be positive and strictly decreasing");
                }
            }
        }
        if (root.contains("aq_levels")) {
            cfg.options.aq_levels = integer(root.at("aq_levels"), "aq_levels");
            if (cfg.options.aq_levels < 1 || cfg.options.aq_levels > 30) fail("aq_levels", "must lie in [1, 30]");
        }
        cfg.options.tolerance = number_or(root, "tolerance", kEstimateTolerance, "config");
        if (!(cfg.options.tolerance >= 0.0)) fail("tolerance", "must be >= 0");

        if (root.contains("mc")) {
            const auto& mc = root.at("mc");
            check_keys(mc, "mc", {"enabled", "n_paths", "seed", "probes", "z_threshold", "min_agreement"});
            cfg.mc.enabled = mc.value("enabled", true);
            if (mc.contains("n_paths")) {
                if (!mc.at("n_paths").is_number_integer() || mc.at("n_paths").get<long long>() < 2) {
                    fail("mc.n_paths", "must be an integer >= 2");
                }
                cfg.mc.n_paths = mc.at("n_paths").get<std::size_t>();
            }
            if (mc.contains("seed")) {
                if (!mc.at("seed").is_number_unsigned()) fail("mc.seed", "must be a non-negative integer");
                cfg.mc.seed = mc.at("seed").get<std::uint64_t>();
            }
            cfg.mc.z_threshold = number_or(mc, "z_threshold", 3.0, "mc");
            cfg.mc.min_agreement = number_or(mc, "min_agreement", 0.95, "mc");
            if (mc.contains("probes")) {
                const auto& probes = mc.at("probes");
                if (!probes.is_array()) fail("mc.probes", "expected a list of {t, x}");
                for (std::size_t i = 0; i < probes.size(); ++i) {
                    const std::string pk = "mc.probes[" + std::to_string(i) + "]";
                    check_keys(probes[i], pk, {"t", "x"});
                    Probe probe;
                    probe.t = number(probes[i].at("t"), pk + ".t");
                    const Vector x = vector_of(probes[i].at("x"), cfg.dimension, pk + ".x");
                    for (int j = 0; j < cfg.dimension; ++j) probe.x[j] = x(j);
                    cfg.mc.probes.push_back(probe);
                }
            }
        }
        if (root.contains("rescaling")) {
            const auto& r = root.at("rescaling");
            check_keys(r, "rescaling", {"lambdas", "profiles", "max_spread"});
            if (r.contains("lambdas")) cfg.rescaling.lambdas = number_list(r.at("lambdas"), "rescaling.lambdas");
            for (double l : cfg.rescaling.lambdas) {
                if (!(l > 0.0) || !std::isfinite(l)) fail("rescaling.lambdas", "entries must be positive");
            }
            if (r.contains("profiles")) {
                for (const auto& id : r.at("profiles")) {
                    const auto name = id.get<std::string>();
                    if (!ids.count(name)) fail("rescaling.profiles", "unknown profile id '" + name + "'");
                    cfg.rescaling.profiles.push_back(name);
                }
            }
            cfg.rescaling.max_spread = number_or(r, "max_spread", 0.02, "rescaling");
        }
        if (root.contains("output")) {
            const auto& o = root.at("output");
            check_keys(o, "output", {"dir"});
            cfg.out_dir = o.value("dir", cfg.out_dir);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    const auto parent = fs::path(path).parent_path();
    return parse_config(text.str(), parent.empty() ? "." : parent.string());
}

namespace {

struct Prepared {
    Grid grid;
    std::optional<Forcing> forcing;  // periodized on the grid when requested
    bool symbolic = false;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared out;
    if (cfg.forcing_samples) {
        out.grid = cfg.forcing_samples->grid();
        return out;
    }
    double L = 0.0;
    if (cfg.halfwidth) {
        L = *cfg.halfwidth;
    } else {
        for (const auto& p : cfg.profiles) {
            L = std::max(L, recommended_halfwidth(p, cfg.forcing->is_zero() ? 0.0 : cfg.forcing->support_radius()));
        }
        L = std::max(1.0, std::ceil(L));
    }
    out.grid = Grid(cfg.dimension, cfg.n, L);
    out.forcing = cfg.forcing->period_halfwidth() ? cfg.forcing->periodized(L) : *cfg.forcing;
    out.symbolic = true;
    return out;
}

struct Solved {
    SpaceTimeField f;
    SpaceTimeField u;
    int cells = 0;
    double change = 0.0;  // last relative change of the monitored mixed norms
};

Solved solve_profile(const ExperimentConfig& cfg, const Prepared& prep, const CoefficientProfile& profile,
                     std::ostream& log) {
    if (!prep.symbolic) {
        Solved s;
        s.f = *cfg.forcing_samples;
        s.u = solve_exact(s.f, profile);
        s.cells = cfg.cells;
        return s;
    }
    const double p = cfg.ps.front();
    const double q = cfg.qs.front();
    auto monitor = [&](const SpaceTimeField& u, const TimeGrid& tg) {
        const auto norms = lp_norms(u, p);
        return std::array<double, 2>{lhs_sup(norms, u.times(), profile, q),
                                     lhs_weighted(norms, tg, Weight::constant(), profile, q)};
    };
    Solved best;
    std::array<double, 2> previous{};
    int cells = cfg.cells;
    for (int round = 0; round <= (cfg.refine ? cfg.max_refinements : 0); ++round, cells *= 2) {
        const TimeGrid tg{profile.horizon(), cells};
        Solved s;
        s.f = sample(*prep.forcing, prep.grid, tg.midpoints());
        s.u = solve_exact(s.f, profile);
        s.cells = cells;
        const auto now = monitor(s.u, tg);
        if (round > 0) {
            for (int i = 0; i < 2; ++i) {
                const double scale = std::max(std::abs(now[i]), std::abs(previous[i]));
                s.change = std::max(s.change, scale == 0.0 ? 0.0 : std::abs(now[i] - previous[i]) / scale);
            }
        }
        previous = now;
        best = std::move(s);
        log << "  " << profile.id() << ": M = " << cells;
        if (round > 0) log << ", mixed-norm change " << best.change;
        log << "\n";
        if (round > 0 && best.change < 1e-3) break;
    }
    return best;
}

std::vector<Probe> default_probes(const Grid& grid, double horizon) {
    const double h = grid.spacing();
    const std::vector<std::array<double, 3>> points{
        {0.0, 0.0, 0.0}, {4 * h, -4 * h, 0.0}, {-6 * h, 2 * h, 0.0}, {8 * h, 8 * h, 0.0}};
    std::vector<Probe> probes;
    for (int quarter = 1; quarter <= 4; ++quarter) {
        for (auto x : points) {
            for (int i = grid.dimension; i < 3; ++i) x[i] = 0.0;
            probes.push_back({horizon * quarter / 4.0, x});
        }
    }
    return probes;
}

json number_json(double v) {
    if (std::isfinite(v)) return v;
    return csv_number(v);
}

json report_json(const EstimateReport& r) {
    json j;
    j["estimate_id"] = std::string(to_string(r.id));
    j["profile"] = r.parameters.profile;
    j["p"] = number_json(r.parameters.p);
    j["q"] = number_json(r.parameters.q);
    j["beta_w"] = r.parameters.beta_w ? json(*r.parameters.beta_w) : json(nullptr);
    j["weight"] = r.parameters.weight;
    j["horizon"] = r.parameters.horizon;
    j["lhs"] = number_json(r.lhs);
    j["rhs"] = number_json(r.rhs);
    j["rhs_status"] = std::string(to_string(r.rhs_status));
    j["explicit_constant"] = r.explicit_constant ? number_json(*r.explicit_constant) : json(nullptr);
    j["empirical_ratio"] = r.empirical_ratio ? number_json(*r.empirical_ratio) : json(nullptr);
    j["passed"] = r.passed;
    j["vacuous"] = r.vacuous;
    j["note"] = r.note;
    json trace = json::array();
    for (const auto& s : r.epsilon_trace) trace.push_back({s.epsilon, number_json(s.value)});
    j["epsilon_trace"] = trace;
    return j;
}

std::string beta_cell(const EstimateReport& r) {
    return r.parameters.beta_w ? csv_number(*r.parameters.beta_w) : "";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    return out;
}

void write_reports(const fs::path& dir, const ExperimentConfig& cfg, const ScanSummary& scan,
                   const json& extra) {
    json root;
    root["config"] = json::parse(cfg.source);
    json reports = json::array();
    for (const auto& r : scan.reports) reports.push_back(report_json(r));
    root["reports"] = reports;
    json summary;
    summary["reports"] = scan.reports.size();
    summary["failed"] = scan.failed;
    summary["vacuous"] = scan.vacuous;
    summary["max_hessian_ratio"] = scan.max_hessian_ratio;
    for (const auto& [k, v] : extra.items()) summary[k] = v;
    root["summary"] = summary;
    open_out(dir / "reports.json") << root.dump(2) << "\n";

    auto csv = open_out(dir / "summary.csv");
    csv << "estimate_id,profile,p,q,beta_w,lhs,rhs,constant,ratio,passed,vacuous\n";
    for (const auto& r : scan.reports) {
        csv << to_string(r.id) << "," << r.parameters.profile << "," << csv_number(r.parameters.p) << ","
            << csv_number(r.parameters.q) << "," << beta_cell(r) << "," << csv_number(r.lhs) << ","
            << csv_number(r.rhs) << "," << (r.explicit_constant ? csv_number(*r.explicit_constant) : "") << ","
            << (r.empirical_ratio ? csv_number(*r.empirical_ratio) : "") << "," << (r.passed ? "true" : "false")
            << "," << (r.vacuous ? "true" : "false") << "\n";
    }

    auto traces = open_out(dir / "epsilon_traces.csv");
    traces << "estimate_id,profile,p,q,beta_w,k,epsilon,rhs_epsilon\n";
    for (const auto& r : scan.reports) {
        for (std::size_t k = 0; k < r.epsilon_trace.size(); ++k) {
            traces << to_string(r.id) << "," << r.parameters.profile << "," << csv_number(r.parameters.p) << ","
                   << csv_number(r.parameters.q) << "," << beta_cell(r) << "," << k << ","
                   << csv_number(r.epsilon_trace[k].epsilon) << "," << csv_number(r.epsilon_trace[k].value)
                   << "\n";
        }
    }
}

struct Agreement {
    std::vector<std::pair<std::string, ProbeComparison>> rows;
    std::size_t agree = 0;
};

void write_agreement(const fs::path& dir, const Agreement& agreement, int d) {
    auto csv = open_out(dir / "solver_agreement.csv");
    csv << "profile,t";
    for (int i = 0; i < d; ++i) csv << ",x" << i + 1;
    csv << ",spectral,mc,standard_error,z,agree\n";
    for (const auto& [id, row] : agreement.rows) {
        csv << id << "," << csv_number(row.probe.t);
        for (int i = 0; i < d; ++i) csv << "," << csv_number(row.probe.x[i]);
        csv << "," << csv_number(row.spectral) << "," << csv_number(row.mc.estimate) << ","
            << csv_number(row.mc.standard_error) << "," << csv_number(row.z) << ","
            << (row.agree ? "true" : "false") << "\n";
    }
}

std::string file_stem(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

}  // namespace

int run(const ExperimentConfig& cfg, Command command, const std::string& out_dir, std::ostream& log) {
    if (command == Command::selfcheck) return selfcheck(out_dir, log);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const Prepared prep = prepare(cfg);
    log << "grid: d = " << prep.grid.dimension << ", n = " << prep.grid.n << ", L = " << prep.grid.halfwidth << "\n";

    std::vector<double> ps = cfg.ps;
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

    std::vector<EstimateContext> contexts;
    json refinement = json::array();
    for (const auto& profile : cfg.profiles) {
        Solved s = solve_profile(cfg, prep, profile, log);
        refinement.push_back({{"profile", profile.id()}, {"cells", s.cells}, {"change", s.change}});
        if (command == Command::solve) {
            const fs::path fields = dir / "fields";
            fs::create_directories(fields);
            const auto stem = file_stem(profile.id());
            write_field(s.f, (fields / (stem + "_f.bin")).string(), (fields / (stem + "_f.json")).string());
            write_field(s.u, (fields / (stem + "_u.bin")).string(), (fields / (stem + "_u.json")).string());
            continue;
        }
        contexts.emplace_back(profile, std::move(s.f), std::move(s.u), ps, true);
    }
    if (command == Command::solve) {
        json manifest;
        manifest["config"] = json::parse(cfg.source);
        manifest["time_refinement"] = refinement;
        open_out(dir / "fields" / "manifest.json") << manifest.dump(2) << "\n";
        log << "fields written to " << (dir / "fields").string() << "\n";
        return 0;
    }

    ScanParameters params;
    params.pq = ScanParameters::product(cfg.ps, cfg.qs);
    params.betas = cfg.betas;
    params.weight = cfg.weight;
    params.options = cfg.options;
    const ScanSummary scan = scan_profiles(contexts, params);
    log << scan.reports.size() << " reports, " << scan.failed << " failed, " << scan.vacuous << " vacuous\n";
    bool ok = scan.failed == 0;

    json extra;
    extra["time_refinement"] = refinement;
    Agreement agreement;
    if (command == Command::verify && cfg.mc.enabled) {
        if (!prep.symbolic) throw Error(ErrorKind::config, "mc: needs a symbolic forcing");
        const auto probes = cfg.mc.probes.empty() ? default_probes(prep.grid, cfg.horizon) : cfg.mc.probes;
        std::uint64_t seed = cfg.mc.seed;
        for (const auto& profile : cfg.profiles) {
            const auto rows = cross_validate(profile, *cfg.forcing, prep.grid, cfg.cells, probes,
                                             cfg.mc.n_paths, seed++, cfg.mc.z_threshold);
            for (const auto& row : rows) {
                agreement.agree += row.agree ? 1 : 0;
                agreement.rows.emplace_back(profile.id(), row);
            }
        }
        const double fraction = agreement.rows.empty()
                                    ? 1.0
                                    : static_cast<double>(agreement.agree) / static_cast<double>(agreement.rows.size());
        extra["solver_agreement"] = {{"probes", agreement.rows.size()},
                                     {"agree", agreement.agree},
                                     {"fraction", fraction},
                                     {"required", cfg.mc.min_agreement}};
        log << "solver agreement: " << agreement.agree << "/" << agreement.rows.size() << " probes\n";
        ok = ok && fraction >= cfg.mc.min_agreement;
    }

    if (command == Command::sweep) {
        if (!prep.symbolic) throw Error(ErrorKind::config, "rescaling: needs a symbolic forcing");
        auto csv = open_out(dir / "rescaling.csv");
        csv << "profile,lambda,cells,horizon,lhs,rhs,ratio,spread\n";
        json spreads = json::object();
        for (const auto& profile : cfg.profiles) {
            const auto& only = cfg.rescaling.profiles;
            if (!only.empty() && std::find(only.begin(), only.end(), profile.id()) == only.end()) continue;
            const auto table = scan_rescaling(profile, *prep.forcing, prep.grid, cfg.cells,
                                              cfg.rescaling.lambdas, cfg.ps.front(), cfg.qs.front(), cfg.options);
            for (const auto& row : table.rows) {
                csv << profile.id() << "," << csv_number(row.lambda) << "," << row.cells << ","
                    << csv_number(row.horizon) << "," << csv_number(row.lhs) << "," << csv_number(row.rhs) << ","
                    << csv_number(row.ratio) << "," << csv_number(table.spread) << "\n";
            }
            spreads[profile.id()] = number_json(table.spread);
            log << "  rescaling " << profile.id() << ": spread " << table.spread << "\n";
            ok = ok && table.spread < cfg.rescaling.max_spread;
        }
        extra["rescaling_spread"] = spreads;
    }

    write_reports(dir, cfg, scan, extra);
    write_agreement(dir, agreement, cfg.dimension);
    log << (ok ? "all non-vacuous checks passed" : "some checks failed") << "; outputs in " << dir.string() << "\n";
    return ok ? 0 : 1;
}

int selfcheck(const std::string& out_dir, std::ostream& log) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const auto results = run_criteria(Resolution::reduced());
    auto csv = open_out(dir / "selfcheck.csv");
    csv << "criterion,name,passed,detail\n";
    bool ok = true;
    for (const auto& r : results) {
        log << (r.passed ? "[PASS] " : "[FAIL] ") << r.number << " " << r.name << ": " << r.detail << "\n";
        std::string detail = r.detail;
        std::replace(detail.begin(), detail.end(), '"', '\'');
        csv << r.number << "," << r.name << "," << (r.passed ? "true" : "false") << ",\"" << detail << "\"\n";
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace degpar
