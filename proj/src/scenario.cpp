#include "mlz/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mlz/families.hpp"
#include "mlz/integrability.hpp"
#include "mlz/semiclassical.hpp"
#include "mlz/sweep.hpp"

namespace mlz {

namespace {

double num(const Json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

Complex complex_from(const Json& j) {
    if (j.is_array()) {
        if (j.size() != 2) throw ValidationError("complex value must be [re, im]");
        return Complex(j[0].get<double>(), j[1].get<double>());
    }
    return Complex(j.get<double>(), 0.0);
}

std::vector<double> grid_from(const Json& j, const std::string& stem) {
    std::vector<double> out;
    if (j.contains(stem + "_values")) {
        for (const auto& v : j.at(stem + "_values")) out.push_back(v.get<double>());
        return out;
    }
    const double from = j.at(stem + "_from").get<double>();
    const double to = j.at(stem + "_to").get<double>();
    const double step = j.at(stem + "_step").get<double>();
    const long count = std::lround(std::floor((to - from) / step + 1e-9));
    for (long k = 0; k <= count; ++k) out.push_back(from + double(k) * step);
    return out;
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open output file " + path);
    for (size_t c = 0; c < table.columns.size(); ++c)
        os << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
    os << "\n";
    for (const auto& row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c)
            os << csv_number(row[c]) << (c + 1 < row.size() ? "," : "");
        os << "\n";
    }
}

/// Convergence bookkeeping folded over every propagation of a scenario.
struct Hygiene {
    bool all_windows_ok = true;
    double max_window_deviation = 0.0;
    double max_norm_drift = 0.0;

    void fold(const ScatterResult& r) {
        all_windows_ok = all_windows_ok && r.window_ok;
        max_window_deviation = std::max(max_window_deviation, r.window_deviation);
        max_norm_drift = std::max(max_norm_drift, r.norm_drift);
    }
    Json to_json() const {
        return Json{{"all_windows_ok", all_windows_ok},
                    {"max_window_deviation", max_window_deviation},
                    {"max_norm_drift", max_norm_drift}};
    }
    void merge(const Hygiene& o) {
        all_windows_ok = all_windows_ok && o.all_windows_ok;
        max_window_deviation = std::max(max_window_deviation, o.max_window_deviation);
        max_norm_drift = std::max(max_norm_drift, o.max_norm_drift);
    }
};

// ----------------------------------------------------------------- kinds --

CsvTable run_spectrum(const Json& doc, const ScatterConfig&, int, Hygiene&) {
    DiabaticModel model = model_from_json(doc.at("model"));
    const double t_from = doc.at("t_from").get<double>();
    const double t_to = doc.at("t_to").get<double>();
    const int points = doc.contains("points") ? doc.at("points").get<int>() : 201;
    CsvTable table;
    table.columns.push_back("t");
    for (int i = 1; i <= model.n(); ++i) table.columns.push_back("E_" + std::to_string(i));
    for (int k = 0; k < points; ++k) {
        const double t =
            points == 1 ? t_from : t_from + (t_to - t_from) * double(k) / double(points - 1);
        std::vector<double> row{t};
        for (double e : eigenvalues_real(model, t)) row.push_back(e);
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable run_propagate(const Json& doc, const ScatterConfig& cfg, int threads, Hygiene& hyg) {
    DiabaticModel model = model_from_json(doc.at("model"));
    const bool half_line = doc.contains("half_line") && doc.at("half_line").get<bool>();
    std::vector<int> inits;
    if (doc.at("initial_level").is_string()) {
        for (int i = 0; i < model.n(); ++i) inits.push_back(i);
    } else {
        inits.push_back(doc.at("initial_level").get<int>() - 1);
    }
    auto results = sweep_map<ScatterResult>(
        static_cast<int>(inits.size()),
        [&](int k) {
            return half_line ? propagate_coulomb_halfline(model, inits[k], cfg)
                             : propagate_scattering(model, inits[k], cfg);
        },
        threads);
    CsvTable table;
    table.columns = {"from", "to", "probability"};
    for (size_t k = 0; k < inits.size(); ++k) {
        hyg.fold(results[k]);
        for (int to = 0; to < model.n(); ++to)
            table.rows.push_back({double(inits[k] + 1), double(to + 1),
                                  results[k].probabilities[to]});
    }
    return table;
}

CsvTable run_invariance(const Json& doc, const ScatterConfig& cfg, int threads, Hygiene& hyg) {
    ThreeStateFamily fam = family_from_json(doc.at("family"));
    std::vector<double> taus;
    for (const auto& v : doc.at("tau_values")) taus.push_back(v.get<double>());
    const int init = doc.contains("initial_level") ? doc.at("initial_level").get<int>() : 2;
    const bool freeze = doc.contains("freeze_eps") && doc.at("freeze_eps").get<bool>();
    const double eps_ref = fam.eps0 * std::sqrt(fam.beta1 * fam.beta2 / (fam.beta1 + fam.beta2));

    auto results = sweep_map<ScatterResult>(
        static_cast<int>(taus.size()),
        [&](int k) {
            DiabaticModel m = three_state_model(fam, taus[k]);
            if (freeze) {
                Matrix a = m.A;
                a(1, 1) = eps_ref;
                m = DiabaticModel(m.B, a);
            }
            return propagate_scattering(m, init - 1, cfg);
        },
        threads);

    CsvTable table;
    table.columns = {"tau", "P_" + std::to_string(init) + "to1",
                     "P_" + std::to_string(init) + "to2", "P_" + std::to_string(init) + "to3"};
    for (size_t k = 0; k < taus.size(); ++k) {
        hyg.fold(results[k]);
        table.rows.push_back({taus[k], results[k].probabilities[0], results[k].probabilities[1],
                              results[k].probabilities[2]});
    }
    return table;
}

CsvTable run_dykhne_sweep(const Json& doc, const ScatterConfig& cfg, int threads, Hygiene& hyg) {
    const double b = doc.at("b").get<double>();
    const double g = doc.at("g").get<double>();
    const double eta = num(doc, "eta", 1.0);
    const std::vector<double> eps = grid_from(doc, "eps");

    struct Point {
        double pd, pn;
        ScatterResult r;
    };
    auto pts = sweep_map<Point>(
        static_cast<int>(eps.size()),
        [&](int k) {
            Point p;
            p.pd = dykhne_probability(b, g, eps[k], eta).P;
            p.r = propagate_coulomb_halfline(reduced_two_state(b, g, eps[k]), 0, cfg);
            p.pn = p.r.probabilities[0];
            return p;
        },
        threads);

    CsvTable table;
    table.columns = {"eps", "P_dykhne", "P_numeric"};
    for (size_t k = 0; k < eps.size(); ++k) {
        hyg.fold(pts[k].r);
        table.rows.push_back({eps[k], pts[k].pd, pts[k].pn});
    }
    return table;
}

CsvTable run_fig6_sweep(const Json& doc, const ScatterConfig& cfg, int threads, Hygiene& hyg) {
    const double b = doc.at("b").get<double>();
    const double eta = num(doc, "eta", 1.0);
    std::vector<double> gs;
    for (const auto& v : doc.at("g_values")) gs.push_back(v.get<double>());
    const std::vector<double> eps = grid_from(doc, "eps");

    struct Point {
        double ps, pn;
        ScatterResult r;
    };
    const int total = static_cast<int>(gs.size() * eps.size());
    auto pts = sweep_map<Point>(
        total,
        [&](int idx) {
            const double g = gs[idx / eps.size()];
            const double e = eps[idx % eps.size()];
            Point p;
            p.ps = p3_semiclassical(b, g, e, eta);
            p.r = propagate_scattering(demo_three_state(b, g, e), 0, cfg);
            p.pn = p.r.probabilities[1];
            return p;
        },
        threads);

    CsvTable table;
    table.columns = {"g", "eps", "P_semiclassical", "P_numeric"};
    for (int idx = 0; idx < total; ++idx) {
        hyg.fold(pts[idx].r);
        table.rows.push_back({gs[idx / eps.size()], eps[idx % eps.size()], pts[idx].ps,
                              pts[idx].pn});
    }
    return table;
}

CsvTable run_chain_avg_n(const Json& doc, const ScatterConfig& cfg, int threads, Hygiene& hyg) {
    const double beta = doc.at("beta").get<double>();
    const int n_max = doc.at("n_max").get<int>();
    const double q = num(doc, "q", 0.5);
    std::vector<double> gs;
    for (const auto& v : doc.at("g_values")) gs.push_back(v.get<double>());

    struct Point {
        double n_num, n_exact;
        ScatterResult r;
    };
    auto pts = sweep_map<Point>(
        static_cast<int>(gs.size()),
        [&](int k) {
            ChainSpec chain = q_deform(bosonic_chain_sector(n_max, beta, gs[k]), q);
            Point p;
            p.r = propagate_scattering(chain.to_model(), 0, cfg);
            p.n_num = 0.0;
            for (int i = 0; i < n_max; ++i) p.n_num += i * p.r.probabilities[i];
            p.n_exact = avg_n_exact(gs[k], beta);
            return p;
        },
        threads);

    CsvTable table;
    table.columns = {"g", "n_avg_numeric", "n_avg_exact"};
    for (size_t k = 0; k < gs.size(); ++k) {
        hyg.fold(pts[k].r);
        table.rows.push_back({gs[k], pts[k].n_num, pts[k].n_exact});
    }
    return table;
}

CsvTable run_four_state_sweep(const Json& doc, const ScatterConfig& cfg, int threads,
                              Hygiene& hyg) {
    const double b = doc.at("b").get<double>();
    const double g = doc.at("g").get<double>();
    const std::vector<double> phis = grid_from(doc, "phi");

    struct Point {
        FourStateExact ex;
        ScatterResult r;
    };
    auto pts = sweep_map<Point>(
        static_cast<int>(phis.size()),
        [&](int k) {
            FourStateParams p;
            p.b = b;
            p.g1 = std::polar(g, phis[k]);
            p.g2 = p.g3 = p.g4 = g;
            Point pt;
            pt.ex = p14_exact(p);
            pt.r = propagate_scattering(four_state_model(p), 0, cfg);
            return pt;
        },
        threads);

    CsvTable table;
    table.columns = {"phi",       "P_1to4",       "P_1to4_exact", "P_1to1",
                     "P_1to1_exact", "P_1todeg", "P_1todeg_exact"};
    for (size_t k = 0; k < phis.size(); ++k) {
        hyg.fold(pts[k].r);
        const auto& pr = pts[k].r.probabilities;
        table.rows.push_back({phis[k], pr[3], pts[k].ex.p_1to4, pr[0], pts[k].ex.p_1to1,
                              pr[1] + pr[2], pts[k].ex.p_1todeg});
    }
    return table;
}

CsvTable run_integrability_report(const Json& doc, const ScatterConfig&, int, Hygiene&,
                                  Json& extra) {
    CsvTable table;
    Json rep_json = Json::object();
    std::vector<std::pair<std::string, double>> rows;
    if (doc.contains("family")) {
        ThreeStateFamily fam = family_from_json(doc.at("family"));
        std::vector<double> taus, ts;
        for (const auto& v : doc.at("tau_grid")) taus.push_back(v.get<double>());
        for (const auto& v : doc.at("t_grid")) ts.push_back(v.get<double>());
        ResidualReport rep = check_zero_curvature(fam, taus, ts);
        rows.insert(rows.end(), {{"family_flatness", rep.max_flatness},
                                 {"family_commutator", rep.max_commutator},
                                 {"family_cond_slope_coupling", rep.cond_slope_coupling},
                                 {"family_cond_coupling_d", rep.cond_coupling_d},
                                 {"family_cond_commuting_d", rep.cond_commuting_d}});
        rep_json["family"] = {{"grid", rep.grid},
                              {"max_flatness", rep.max_flatness},
                              {"max_commutator", rep.max_commutator},
                              {"cond_slope_coupling", rep.cond_slope_coupling},
                              {"cond_coupling_d", rep.cond_coupling_d},
                              {"cond_commuting_d", rep.cond_commuting_d}};
    }
    if (doc.contains("chain")) {
        const Json& c = doc.at("chain");
        ChainSpec base = bosonic_chain_sector(c.at("n_max").get<int>(),
                                              c.at("beta").get<double>(),
                                              c.at("g").get<double>());
        const double r = c.at("r").get<double>();
        const double h = num(c, "stencil_h", 1e-5);
        std::vector<double> taus;
        for (const auto& v : c.at("tau_grid")) taus.push_back(v.get<double>());
        ChainDeformationPath path = chain_deformation_path(base, r);
        ResidualReport rep = check_mlz_conditions(path.B, path.A, path.D, taus, h);
        rows.insert(rows.end(), {{"chain_cond_slope_coupling", rep.cond_slope_coupling},
                                 {"chain_cond_coupling_d", rep.cond_coupling_d},
                                 {"chain_cond_commuting_d", rep.cond_commuting_d}});
        rep_json["chain"] = {{"grid", rep.grid},
                             {"cond_slope_coupling", rep.cond_slope_coupling},
                             {"cond_coupling_d", rep.cond_coupling_d},
                             {"cond_commuting_d", rep.cond_commuting_d}};
    }

    // numeric CSV: index + residual; names live in the manifest
    table.columns = {"check_index", "residual"};
    Json names = Json::array();
    for (size_t i = 0; i < rows.size(); ++i) {
        names.push_back(rows[i].first);
        table.rows.push_back({double(i), rows[i].second});
    }
    rep_json["check_names"] = names;
    extra = rep_json;
    return table;
}

} // namespace

std::string csv_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

ScatterConfig scatter_from_json(const Json& rec, double default_rel_tol) {
    ScatterConfig cfg;
    cfg.rel_tol = default_rel_tol;
    if (rec.is_object()) {
        cfg.t_max = num(rec, "t_max", cfg.t_max);
        cfg.rel_tol = num(rec, "rel_tol", cfg.rel_tol);
        cfg.abs_tol = num(rec, "abs_tol", cfg.abs_tol);
        cfg.rho = num(rec, "rho", cfg.rho);
        cfg.window_check = num(rec, "window_check", cfg.window_check);
    }
    if (!(cfg.t_max > 0.0) || !(cfg.window_check > 0.0) || !(cfg.window_check < 1.0) ||
        cfg.rho < 0.0)
        throw ValidationError("scatter: t_max > 0, 0 < window_check < 1, rho >= 0 required");
    return cfg;
}

ThreeStateFamily family_from_json(const Json& spec) {
    ThreeStateFamily fam(complex_from(spec.at("gamma12")), complex_from(spec.at("gamma13")),
                         complex_from(spec.at("gamma23")), spec.at("eps0").get<double>(),
                         num(spec, "beta1", 1.0), num(spec, "beta2", 1.0));
    if (spec.contains("slope_map")) {
        const std::string name = spec.at("slope_map").get<std::string>();
        if (name == "linear_b1")
            fam.slopes = SlopeMap::linear_b1(fam.beta1, fam.beta2);
        else if (name == "constant")
            fam.slopes = SlopeMap::constant(fam.beta1, fam.beta2);
        else
            throw ValidationError("unknown slope_map: " + name);
    }
    return fam;
}

DiabaticModel model_from_json(const Json& spec) {
    const std::string type = spec.at("type").get<std::string>();
    if (type == "three_state_family")
        return three_state_model(family_from_json(spec.at("family")),
                                 num(spec, "tau", 1.0));
    if (type == "demo_three_state")
        return demo_three_state(spec.at("b").get<double>(), spec.at("g").get<double>(),
                                spec.at("eps").get<double>());
    if (type == "reduced_two_state")
        return reduced_two_state(spec.at("b").get<double>(), spec.at("g").get<double>(),
                                 spec.at("eps").get<double>());
    if (type == "four_state" || type == "effective_coulomb") {
        FourStateParams p;
        p.b = spec.at("b").get<double>();
        p.g1 = complex_from(spec.at("g1"));
        p.g2 = complex_from(spec.at("g2"));
        p.g3 = complex_from(spec.at("g3"));
        p.g4 = complex_from(spec.at("g4"));
        return type == "four_state" ? four_state_model(p) : effective_coulomb_3state(p);
    }
    if (type == "chain") {
        ChainSpec chain = bosonic_chain_sector(spec.at("n_max").get<int>(),
                                               spec.at("beta").get<double>(),
                                               spec.at("g").get<double>());
        return q_deform(chain, num(spec, "q", 1.0)).to_model();
    }
    if (type == "raw") {
        const int n = static_cast<int>(spec.at("B").size());
        RealVector b(n), q = RealVector::Zero(n), k = RealVector::Zero(n);
        for (int i = 0; i < n; ++i) b[i] = spec.at("B")[i].get<double>();
        if (spec.contains("Q"))
            for (int i = 0; i < n; ++i) q[i] = spec.at("Q")[i].get<double>();
        if (spec.contains("K"))
            for (int i = 0; i < n; ++i) k[i] = spec.at("K")[i].get<double>();
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = complex_from(spec.at("A")[i][j]);
        return DiabaticModel(q, b, a, k);
    }
    throw ValidationError("unknown model type: " + type);
}

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ValidationError("override must look like path.to.key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    Json* node = &doc;
    size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ValidationError("override path has an empty component");
        if (dot == std::string::npos) {
            Json parsed = Json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
            return;
        }
        node = &((*node)[key]);
        start = dot + 1;
    }
}

namespace {

void require(ValidationReport& rep, bool ok, const std::string& message) {
    if (!ok) {
        rep.valid = false;
        rep.errors.push_back(message);
    }
}

void require_fields(ValidationReport& rep, const Json& doc,
                    const std::vector<std::string>& fields) {
    for (const auto& f : fields)
        require(rep, doc.contains(f), "missing required field: " + f);
}

} // namespace

ValidationReport validate_scenario(const Json& doc) {
    ValidationReport rep;
    static const std::set<std::string> kinds = {
        "spectrum",      "propagate",  "invariance",       "dykhne_sweep",
        "fig6_sweep",    "chain_avg_n", "four_state_sweep", "integrability_report"};

    if (!doc.is_object()) {
        require(rep, false, "scenario must be a JSON object");
        return rep;
    }
    require(rep, doc.contains("kind"), "missing required field: kind");
    if (!rep.valid) return rep;
    const std::string kind = doc.at("kind").get<std::string>();
    require(rep, kinds.count(kind) > 0, "unknown kind: " + kind);
    if (!rep.valid) return rep;

    if (kind != "integrability_report")
        require(rep, doc.contains("output"), "missing required field: output");

    if (doc.contains("scatter")) {
        try {
            (void)scatter_from_json(doc.at("scatter"));
        } catch (const std::exception& e) {
            require(rep, false, e.what());
        }
    }

    auto check_family = [&](const Json& f) {
        require_fields(rep, f, {"gamma12", "gamma13", "gamma23", "eps0"});
        if (!rep.valid) return;
        try {
            (void)family_from_json(f);
        } catch (const std::exception& e) {
            require(rep, false, std::string("family: ") + e.what());
        }
    };

    if (kind == "spectrum" || kind == "propagate") {
        require_fields(rep, doc, {"model"});
        if (kind == "spectrum") require_fields(rep, doc, {"t_from", "t_to"});
        if (kind == "propagate") require_fields(rep, doc, {"initial_level"});
        if (rep.valid) {
            try {
                DiabaticModel m = model_from_json(doc.at("model"));
                if (kind == "propagate" && doc.contains("half_line") &&
                    doc.at("half_line").get<bool>())
                    require(rep, m.has_coulomb(),
                            "half_line requires a model with a 1/t term");
            } catch (const std::exception& e) {
                require(rep, false, std::string("model: ") + e.what());
            }
        }
    } else if (kind == "invariance") {
        require_fields(rep, doc, {"family", "tau_values"});
        if (doc.contains("family")) check_family(doc.at("family"));
        if (doc.contains("tau_values")) {
            for (const auto& v : doc.at("tau_values")) {
                const double tau = v.get<double>();
                // default slope map has b1 = beta1 * tau: tau <= 0 degenerates
                require(rep, tau > 0.0,
                        "tau_values: DegenerateSlopes predicted at tau = " + csv_number(tau));
            }
        }
    } else if (kind == "dykhne_sweep") {
        require_fields(rep, doc, {"b", "g"});
        require(rep,
                doc.contains("eps_values") ||
                    (doc.contains("eps_from") && doc.contains("eps_to") &&
                     doc.contains("eps_step")),
                "missing eps grid: eps_values or eps_from/eps_to/eps_step");
        if (doc.contains("b")) require(rep, doc.at("b").get<double>() > 0.0, "b must be positive");
        if (doc.contains("g")) require(rep, doc.at("g").get<double>() > 0.0, "g must be positive");
    } else if (kind == "fig6_sweep") {
        require_fields(rep, doc, {"b", "g_values"});
        require(rep,
                doc.contains("eps_values") ||
                    (doc.contains("eps_from") && doc.contains("eps_to") &&
                     doc.contains("eps_step")),
                "missing eps grid: eps_values or eps_from/eps_to/eps_step");
        if (rep.valid)
            for (double e : grid_from(doc, "eps"))
                require(rep, e > 0.0, "fig6_sweep requires eps > 0");
    } else if (kind == "chain_avg_n") {
        require_fields(rep, doc, {"beta", "n_max", "g_values"});
        if (doc.contains("n_max"))
            require(rep, doc.at("n_max").get<int>() >= 2, "n_max must be at least 2");
        if (rep.valid && doc.contains("q")) {
            try {
                (void)q_deform(bosonic_chain_sector(doc.at("n_max").get<int>(),
                                                    doc.at("beta").get<double>(), 0.1),
                               doc.at("q").get<double>());
            } catch (const std::exception& e) {
                require(rep, false, std::string("DeformationSingular predicted: ") + e.what());
            }
        }
    } else if (kind == "four_state_sweep") {
        require_fields(rep, doc, {"b", "g"});
        require(rep,
                doc.contains("phi_values") ||
                    (doc.contains("phi_from") && doc.contains("phi_to") &&
                     doc.contains("phi_step")),
                "missing phi grid: phi_values or phi_from/phi_to/phi_step");
    } else if (kind == "integrability_report") {
        require(rep, doc.contains("family") || doc.contains("chain"),
                "integrability_report needs a family and/or chain record");
        if (doc.contains("family")) {
            check_family(doc.at("family"));
            require_fields(rep, doc, {"tau_grid", "t_grid"});
        }
        if (doc.contains("chain"))
            require_fields(rep, doc.at("chain"), {"beta", "n_max", "g", "r", "tau_grid"});
        require(rep, doc.contains("output"), "missing required field: output");
    }
    return rep;
}

RunOutcome run_scenario(const Json& doc, const std::string& out_dir, int threads) {
    RunOutcome out;
    ValidationReport rep = validate_scenario(doc);
    if (!rep.valid) {
        out.exit_code = 1;
        out.error = {{"error", {{"type", "ValidationError"}, {"messages", rep.errors}}}};
        return out;
    }

    const char* env_tol = std::getenv("MLZ_DEFAULT_TOL");
    const double default_tol = env_tol ? std::strtod(env_tol, nullptr) : 1e-10;
    ScatterConfig cfg = scatter_from_json(doc.contains("scatter") ? doc.at("scatter") : Json(),
                                          default_tol);

    const std::string kind = doc.at("kind").get<std::string>();
    const auto t0 = std::chrono::steady_clock::now();
    Hygiene hyg;
    Json extra;
    CsvTable table;
    try {
        if (kind == "spectrum")
            table = run_spectrum(doc, cfg, threads, hyg);
        else if (kind == "propagate")
            table = run_propagate(doc, cfg, threads, hyg);
        else if (kind == "invariance")
            table = run_invariance(doc, cfg, threads, hyg);
        else if (kind == "dykhne_sweep")
            table = run_dykhne_sweep(doc, cfg, threads, hyg);
        else if (kind == "fig6_sweep")
            table = run_fig6_sweep(doc, cfg, threads, hyg);
        else if (kind == "chain_avg_n")
            table = run_chain_avg_n(doc, cfg, threads, hyg);
        else if (kind == "four_state_sweep")
            table = run_four_state_sweep(doc, cfg, threads, hyg);
        else if (kind == "integrability_report")
            table = run_integrability_report(doc, cfg, threads, hyg, extra);
    } catch (const NotConverged& e) {
        out.exit_code = 2;
        out.error = {{"error", {{"type", "NotConverged"}, {"message", e.what()}}}};
        return out;
    } catch (const Error& e) {
        out.exit_code = 1;
        out.error = {{"error", {{"type", "Error"}, {"message", e.what()}}}};
        return out;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(out_dir);
    const std::string csv_name = doc.at("output").get<std::string>();
    out.csv_path = out_dir + "/" + csv_name;
    write_csv(out.csv_path, table);

    out.manifest = {{"kind", kind},
                    {"scenario", doc},
                    {"csv", csv_name},
                    {"columns", table.columns},
                    {"rows", table.rows.size()},
                    {"threads", threads > 0 ? threads : default_threads()},
                    {"tolerances",
                     {{"t_max", cfg.t_max},
                      {"rel_tol", cfg.rel_tol},
                      {"abs_tol", cfg.abs_tol},
                      {"rho", cfg.rho},
                      {"window_check", cfg.window_check}}},
                    {"convergence", hyg.to_json()},
                    {"wall_time_s", wall}};
    if (!extra.is_null()) out.manifest["report"] = extra;

    std::ofstream ms(out.csv_path + ".manifest.json", std::ios::binary);
    ms << out.manifest.dump(2) << "\n";
    return out;
}

} // namespace mlz
