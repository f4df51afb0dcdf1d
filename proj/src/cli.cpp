#include "nlrabi/cli.hpp"

#include "nlrabi/gfunction.hpp"
#include "nlrabi/isolated.hpp"
#include "nlrabi/parallel.hpp"
#include "nlrabi/recurrence.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace nlrabi::cli {

namespace {

// Shortest representation that reads back to the same double.
std::string num17(double x) {
    for (int digits = 15; digits < 17; ++digits) {
        const std::string s = format_number(x, digits);
        if (std::strtod(s.c_str(), nullptr) == x) return s;
    }
    return format_number(x, 17);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

double coupling_scale(Realization r) { return r == Realization::TwoPhoton ? 2.0 : 1.0; }

void push_model_header(Document& doc, const RunConfig& cfg, bool with_g) {
    doc.parameters.emplace_back("epsilon", num17(cfg.epsilon));
    doc.parameters.emplace_back("omega", num17(cfg.omega));
    if (with_g) doc.parameters.emplace_back("g", num17(cfg.g));
    doc.parameters.emplace_back("k", to_string(cfg.k));
    doc.parameters.emplace_back("realization", std::string(to_string(cfg.realization)));
}

std::string range_text(const Range& r) { return num17(r.lo) + ":" + num17(r.hi) + ":" + std::to_string(r.n); }

std::vector<Parity> parities_of(const std::string& text) {
    if (text == "both") return {Parity::Even, Parity::Odd};
    return {parse_parity(text)};
}

void check_coupling(const RunConfig& cfg, double g) {
    ModelParams p = cfg.params();
    p.g = g;
    const ModelParams u = map_realization(p).unified;
    require(u.g > 0.0 && 2.0 * u.g < u.omega,
            "coupling g=" + num17(g) + " outside (0, omega/2) of the unified model");
}

ScanOptions scan_options(const RunConfig& cfg, int jobs) {
    ScanOptions opts;
    if (cfg.tol) opts.root_tol = *cfg.tol;
    opts.jobs = jobs;
    return opts;
}

void check_range(const Range& r, const char* name) {
    require(r.n >= 1, std::string(name) + ": need at least one point");
    require(std::isfinite(r.lo) && std::isfinite(r.hi), std::string(name) + ": bounds must be finite");
    require(r.n == 1 || r.hi > r.lo, std::string(name) + ": empty range");
}

}  // namespace

// ----------------------------------------------------------------------------

Range parse_range(std::string_view text) {
    const auto a = text.find(':');
    const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos)
        throw std::invalid_argument("range '" + std::string(text) + "' is not of the form a:b:n");
    Range r;
    try {
        std::size_t pos = 0;
        const std::string lo(text.substr(0, a)), hi(text.substr(a + 1, b - a - 1)), n(text.substr(b + 1));
        r.lo = std::stod(lo, &pos);
        if (pos != lo.size()) throw std::invalid_argument(lo);
        r.hi = std::stod(hi, &pos);
        if (pos != hi.size()) throw std::invalid_argument(hi);
        r.n = std::stoi(n, &pos);
        if (pos != n.size()) throw std::invalid_argument(n);
    } catch (const std::exception&) {
        throw std::invalid_argument("range '" + std::string(text) + "' is not of the form a:b:n");
    }
    check_range(r, "range");
    return r;
}

IntRange parse_int_range(std::string_view text) {
    IntRange r;
    try {
        const auto dots = text.find("..");
        std::size_t pos = 0;
        if (dots == std::string_view::npos) {
            const std::string s(text);
            r.lo = r.hi = std::stoi(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
        } else {
            const std::string lo(text.substr(0, dots)), hi(text.substr(dots + 2));
            r.lo = std::stoi(lo, &pos);
            if (pos != lo.size()) throw std::invalid_argument(lo);
            r.hi = std::stoi(hi, &pos);
            if (pos != hi.size()) throw std::invalid_argument(hi);
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("index range '" + std::string(text) + "' is not of the form a..b");
    }
    if (r.hi < r.lo) throw std::invalid_argument("index range '" + std::string(text) + "' is empty");
    return r;
}

ModelParams RunConfig::params() const {
    ModelParams p;
    p.epsilon = epsilon;
    p.omega = omega;
    p.g = g;
    p.k = k;
    p.realization = realization;
    return p;
}

std::string format_number(double x, int digits) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

// ----------------------------------------------------------------------------
// isolated

Document cmd_isolated(const RunConfig& cfg) {
    const double tol = cfg.tol.value_or(1e-12);
    require(tol > 0.0, "--tol must be > 0");
    require(cfg.M.lo >= 1, "--M must start at 1 or above");
    require(cfg.grid >= 2, "--grid must be >= 2");
    ModelParams base = cfg.params();
    base.g = 0.0;
    const MappedParams mp = map_realization(base);
    const double gscale = coupling_scale(cfg.realization);

    Document doc;
    doc.command = "isolated";
    push_model_header(doc, cfg, false);
    doc.parameters.emplace_back("M", std::to_string(cfg.M.lo) + ".." + std::to_string(cfg.M.hi));
    doc.parameters.emplace_back("grid", std::to_string(cfg.grid));
    doc.parameters.emplace_back("tol", num17(tol));
    doc.table.columns = {"k", "M", "g", "E"};

    IsolatedOptions opts;
    opts.grid_n = cfg.grid;
    opts.tol = tol;
    const int count = cfg.M.hi - cfg.M.lo + 1;
    std::vector<IsolatedSearch> found(count);
    parallel_for(count, cfg.jobs, [&](std::size_t i) {
        found[i] = find_isolated(cfg.M.lo + static_cast<int>(i), mp.unified.k, mp.unified.epsilon, mp.unified.omega, opts);
    });

    for (int i = 0; i < count; ++i) {
        for (const std::string& d : found[i].diagnostics)
            if (std::find(doc.warnings.begin(), doc.warnings.end(), d) == doc.warnings.end()) doc.warnings.push_back(d);
        for (const IsolatedSolution& s : found[i].solutions)
            doc.table.rows.push_back({cfg.k.value(), std::int64_t{s.M}, s.g_star / gscale, s.E_star - mp.energy_shift});
    }
    return doc;
}

// ----------------------------------------------------------------------------
// spectrum

Document cmd_spectrum(const RunConfig& cfg) {
    require(cfg.g_range.has_value(), "spectrum needs --g-range a:b:n");
    const Range gr = *cfg.g_range;
    check_range(gr, "--g-range");
    require(cfg.n_levels >= 1, "--n-levels must be >= 1");
    check_coupling(cfg, gr.lo);
    check_coupling(cfg, gr.hi);
    const std::vector<Parity> wanted = parities_of(cfg.parity);

    Document doc;
    doc.command = "spectrum";
    push_model_header(doc, cfg, false);
    doc.parameters.emplace_back("g_range", range_text(gr));
    doc.parameters.emplace_back("parity", cfg.parity);
    if (cfg.E_max)
        doc.parameters.emplace_back("E_max", num17(*cfg.E_max));
    else
        doc.parameters.emplace_back("n_levels", std::to_string(cfg.n_levels));
    doc.parameters.emplace_back("root_tol", num17(scan_options(cfg, 1).root_tol));
    doc.table.columns = {"g", "E", "parity", "source", "index"};

    std::vector<std::optional<SpectrumResult>> results(gr.n);
    std::vector<std::string> failures(gr.n);
    parallel_for(gr.n, cfg.jobs, [&](std::size_t i) {
        ModelParams p = cfg.params();
        p.g = gr.at(static_cast<int>(i));
        try {
            const ScanOptions opts = scan_options(cfg, 1);
            results[i] = cfg.E_max ? spectrum(p, *cfg.E_max, opts) : spectrum_lowest(p, cfg.n_levels, opts);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    for (int i = 0; i < gr.n; ++i) {
        const double g = gr.at(i);
        if (!results[i]) {
            doc.warnings.push_back("g=" + num17(g) + ": " + failures[i]);
            continue;
        }
        std::int64_t idx = 0;
        for (const Level& l : results[i]->levels) {
            if (std::find(wanted.begin(), wanted.end(), l.parity) == wanted.end()) continue;
            doc.table.rows.push_back({g, l.E, std::string(to_string(l.parity)), std::string(to_string(l.source)), idx++});
        }
        const double top = results[i]->levels.empty() ? 0.0 : results[i]->levels.back().E;
        for (std::size_t m = 0; m < results[i]->baselines.size(); ++m) {
            const double b = results[i]->baselines[m];
            if (!cfg.E_max && b > top) break;
            doc.table.rows.push_back({g, b, std::string("none"), std::string("baseline"), static_cast<std::int64_t>(m)});
        }
    }
    return doc;
}

// ----------------------------------------------------------------------------
// gfun

Document cmd_gfun(const RunConfig& cfg) {
    const ModelParams p = cfg.params();
    check_coupling(cfg, cfg.g);
    const MappedParams mp = map_realization(p);
    const DerivedQuantities dq = derive(mp.unified);
    const double k = mp.unified.kval();
    const std::vector<Parity> wanted = parities_of(cfg.parity);

    Range er;
    if (cfg.E_range) {
        er = *cfg.E_range;
    } else {
        er.lo = default_scan_floor(p) - mp.energy_shift;
        er.hi = baseline(dq, k, cfg.n_levels) + mp.unified.epsilon - mp.energy_shift;
        er.n = 1001;
    }
    check_range(er, "--E-range");
    require(er.n >= 2, "--E-range needs at least two points");

    const ScanOptions opts = scan_options(cfg, cfg.jobs);
    const double window = opts.pole_window * opts.g.recurrence.pole_guard * mp.unified.omega;

    Document doc;
    doc.command = "gfun";
    push_model_header(doc, cfg, true);
    doc.parameters.emplace_back("E_range", range_text(er));
    doc.parameters.emplace_back("parity", cfg.parity);
    doc.parameters.emplace_back("series_tol", num17(opts.g.series_tol));
    doc.parameters.emplace_back("root_tol", num17(opts.root_tol));
    doc.parameters.emplace_back("pole_window", num17(window));

    std::vector<GPair> values(er.n);
    std::vector<char> masked(er.n, 0);
    parallel_for(er.n, cfg.jobs, [&](std::size_t i) {
        const double Eu = er.at(static_cast<int>(i)) + mp.energy_shift;
        const long m = std::lround(Eu / dq.beta - k);
        if (mp.unified.epsilon != 0.0 && m >= 0 && std::abs(baseline(dq, k, static_cast<int>(m)) - Eu) <= window) {
            masked[i] = 1;
            return;
        }
        values[i] = g_eval_both(Eu, mp.unified, opts.g);
    });

    auto median_abs = [&](Parity par) {
        std::vector<double> a;
        for (int i = 0; i < er.n; ++i)
            if (!masked[i]) a.push_back(std::abs(par == Parity::Even ? values[i].even.value : values[i].odd.value));
        if (a.empty()) return 1.0;
        std::nth_element(a.begin(), a.begin() + a.size() / 2, a.end());
        const double med = a[a.size() / 2];
        return med > 0.0 ? med : 1.0;
    };

    doc.table.columns = {"E"};
    std::vector<double> scales;
    for (Parity par : wanted) {
        doc.table.columns.push_back(par == Parity::Even ? "G_even" : "G_odd");
        scales.push_back(median_abs(par));
        doc.summary.emplace_back(par == Parity::Even ? "median_abs_G_even" : "median_abs_G_odd", scales.back());
    }
    doc.table.columns.push_back("pole");

    for (int i = 0; i < er.n; ++i) {
        std::vector<Cell> row{er.at(i)};
        for (std::size_t j = 0; j < wanted.size(); ++j) {
            if (masked[i]) {
                row.emplace_back(std::monostate{});
            } else {
                const double v = wanted[j] == Parity::Even ? values[i].even.value : values[i].odd.value;
                row.emplace_back(v / scales[j]);
            }
        }
        row.emplace_back(std::int64_t{masked[i]});
        doc.table.rows.push_back(std::move(row));
    }

    Table roots;
    roots.columns = {"E", "parity", "source", "residual"};
    std::vector<Root> all;
    for (Parity par : wanted) {
        auto r = scan_roots_detailed(er.lo + mp.energy_shift, er.hi + mp.energy_shift, par, mp.unified, opts);
        all.insert(all.end(), r.begin(), r.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const Root& a, const Root& b) { return a.E < b.E; });
    for (const Root& r : all)
        roots.rows.push_back({r.E - mp.energy_shift, std::string(to_string(r.parity)),
                              std::string(r.exceptional ? "exceptional" : "groot"), r.residual});
    doc.companions.emplace_back("roots", std::move(roots));
    return doc;
}

// ----------------------------------------------------------------------------
// coeffs

Document cmd_coeffs(const RunConfig& cfg) {
    const ModelParams p = cfg.params();
    check_coupling(cfg, cfg.g);
    require(cfg.m_max >= 1, "--m-max must be >= 1");
    require(cfg.fit_lo >= 0 && cfg.fit_hi <= cfg.m_max && cfg.fit_hi - cfg.fit_lo >= 10,
            "fit window must satisfy 0 <= fit-lo, fit-hi <= m-max, fit-hi - fit-lo >= 10");
    const MappedParams mp = map_realization(p);
    const DerivedQuantities dq = derive(mp.unified);

    double E_model = 0.0;
    std::string source;
    if (cfg.E) {
        E_model = *cfg.E;
        source = "explicit";
    } else {
        Parity want;
        if (cfg.select == "lowest-odd")
            want = Parity::Odd;
        else if (cfg.select == "lowest-even")
            want = Parity::Even;
        else
            throw std::invalid_argument("--select must be lowest-odd or lowest-even");
        const SpectrumResult s = spectrum_lowest(p, 6, scan_options(cfg, cfg.jobs));
        auto it = std::find_if(s.levels.begin(), s.levels.end(), [&](const Level& l) { return l.parity == want; });
        if (it == s.levels.end()) throw std::runtime_error("no " + cfg.select + " level found");
        E_model = it->E;
        source = cfg.select;
    }
    const std::string method = cfg.method.empty() ? (cfg.E ? "forward" : "minimal") : cfg.method;
    require(method == "forward" || method == "minimal", "--method must be forward or minimal");

    const double Eu = E_model + mp.energy_shift;
    const CoefficientSequence seq =
        method == "forward" ? run_recurrence(Eu, mp.unified, cfg.m_max) : minimal_solution(Eu, mp.unified, cfg.m_max);

    Document doc;
    doc.command = "coeffs";
    push_model_header(doc, cfg, true);
    doc.parameters.emplace_back("E", num17(E_model));
    doc.parameters.emplace_back("E_source", source);
    doc.parameters.emplace_back("method", method);
    doc.parameters.emplace_back("m_max", std::to_string(cfg.m_max));
    doc.parameters.emplace_back("fit_window", std::to_string(cfg.fit_lo) + ".." + std::to_string(cfg.fit_hi));
    doc.table.columns = {"m", "d_m", "c_m", "ln_abs_d_m"};
    for (int m = 0; m < seq.size(); ++m)
        doc.table.rows.push_back({std::int64_t{m}, seq.d_value(m), seq.c_value(m), seq.log_abs_d(m)});

    doc.summary.emplace_back("gamma_d", dq.gamma_d);
    doc.summary.emplace_back("reference_slope", -dq.gamma_d);
    if (cfg.fit_hi < seq.size()) {
        const double gamma = fit_decay_rate(seq, cfg.fit_lo, cfg.fit_hi);
        doc.summary.emplace_back("gamma_fit", gamma);
        doc.summary.emplace_back("fitted_slope", -gamma);
    } else {
        doc.warnings.push_back("sequence truncated before the fit window; no decay rate fitted");
    }
    if (seq.truncated) doc.warnings.push_back("recurrence overflowed; sequence truncated");
    return doc;
}

// ----------------------------------------------------------------------------
// diag

Document cmd_diag(const RunConfig& cfg) {
    require(cfg.N >= 2, "--N must be >= 2");
    require(cfg.n_levels >= 1 && cfg.n_levels <= 2 * cfg.N, "--n-levels must lie in [1, 2N]");
    const ModelParams p = cfg.params();
    const MappedParams mp = map_realization(p);
    const double tol = cfg.tol.value_or(1e-9);
    require(tol > 0.0, "--tol must be > 0");

    Document doc;
    doc.command = "diag";
    push_model_header(doc, cfg, true);
    doc.parameters.emplace_back("N", std::to_string(cfg.N));
    doc.parameters.emplace_back("n_levels", std::to_string(cfg.n_levels));
    doc.parameters.emplace_back("basis", cfg.basis == SpinBasis::SigmaZ ? "sigmaz" : "sigmax");
    doc.table.columns = {"index", "E", "parity", "source"};

    if (cfg.basis == SpinBasis::SigmaX) {
        require(cfg.realization == Realization::Unified, "--basis sigmax is only available for the unified model");
        const auto ev = eigen_sym(build_unified(p, cfg.N, SpinBasis::SigmaX), cfg.n_levels);
        for (std::size_t i = 0; i < ev.size(); ++i)
            doc.table.rows.push_back({static_cast<std::int64_t>(i), ev[i], std::string("none"), std::string("oracle")});
    } else {
        const SpectrumResult s = oracle_spectrum(p, cfg.N, cfg.n_levels);
        for (std::size_t i = 0; i < s.levels.size(); ++i)
            doc.table.rows.push_back({static_cast<std::int64_t>(i), s.levels[i].E, std::string(to_string(s.levels[i].parity)),
                                      std::string("oracle")});
    }

    if (cfg.certify) {
        const ConvergenceReport rep = certify_convergence(p, cfg.N, cfg.n_levels, tol);
        doc.parameters.emplace_back("convergence_tol", num17(tol));
        doc.summary.emplace_back("max_diff_N_vs_2N", rep.max_diff);
        doc.summary.emplace_back("converged", rep.converged ? 1.0 : 0.0);
        if (!rep.converged) {
            std::string w = "truncation N=" + std::to_string(cfg.N) + " not converged: lowest levels move by " +
                            format_number(rep.max_diff, 3) + " at 2N";
            if (2.0 * mp.unified.g > 0.9 * mp.unified.omega) w += " (near spectral collapse)";
            doc.warnings.push_back(w);
        }
    }
    return doc;
}

Document run_command(const RunConfig& cfg) {
    require(cfg.jobs >= 1, "--jobs must be >= 1");
    if (cfg.command == "isolated") return cmd_isolated(cfg);
    if (cfg.command == "spectrum") return cmd_spectrum(cfg);
    if (cfg.command == "gfun") return cmd_gfun(cfg);
    if (cfg.command == "coeffs") return cmd_coeffs(cfg);
    if (cfg.command == "diag") return cmd_diag(cfg);
    throw std::invalid_argument("unknown command '" + cfg.command + "'");
}

// ----------------------------------------------------------------------------
// encoders

namespace {

std::string cell_text(const Cell& c, int digits) {
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, double>) return format_number(v, digits);
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
            else return v;
        },
        c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return nullptr;
                return v;
            } else return v;
        },
        c);
}

nlohmann::ordered_json table_json(const Table& t) {
    nlohmann::ordered_json j;
    j["columns"] = t.columns;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        auto r = nlohmann::ordered_json::array();
        for (const Cell& c : row) r.push_back(cell_json(c));
        j["rows"].push_back(std::move(r));
    }
    return j;
}

void write_header(const Document& doc, std::ostream& os, int digits) {
    os << "# " << kToolName << ' ' << kToolVersion << ' ' << doc.command << '\n';
    for (const auto& [key, value] : doc.parameters) os << "# " << key << '=' << value << '\n';
    for (const auto& [key, value] : doc.summary) os << "# " << key << '=' << format_number(value, digits) << '\n';
}

}  // namespace

void write_csv_table(const Document& doc, const Table& table, std::ostream& os, int digits) {
    write_header(doc, os, digits);
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i], digits);
        os << '\n';
    }
}

void write_csv(const Document& doc, std::ostream& os, int digits) { write_csv_table(doc, doc.table, os, digits); }

void write_json(const Document& doc, std::ostream& os) {
    nlohmann::ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = doc.command;
    j["parameters"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : doc.parameters) j["parameters"][key] = value;
    j["summary"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : doc.summary) j["summary"][key] = std::isfinite(value) ? nlohmann::ordered_json(value) : nullptr;
    j["columns"] = doc.table.columns;
    j["rows"] = table_json(doc.table)["rows"];
    for (const auto& [name, table] : doc.companions) j["tables"][name] = table_json(table);
    j["warnings"] = doc.warnings;
    os << j.dump(1) << '\n';
}

void write_console(const Document& doc, std::ostream& os) {
    constexpr int digits = 10;
    auto print = [&](const Table& t) {
        std::vector<std::size_t> width(t.columns.size());
        for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
        for (const auto& row : t.rows)
            for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
                width[i] = std::max(width[i], cell_text(row[i], digits).size());
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "  " : "") << std::setw(int(width[i])) << t.columns[i];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "  " : "") << std::setw(int(width[i])) << cell_text(row[i], digits);
            os << '\n';
        }
    };
    write_header(doc, os, digits);
    print(doc.table);
    for (const auto& [name, table] : doc.companions) {
        os << "\n# " << name << '\n';
        print(table);
    }
}

// ----------------------------------------------------------------------------
// entry point

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

// Splices key=value lines from --config into the argument list; flags given
// on the command line take precedence.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a path");
            path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw CLI::FileError("cannot read config file " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    auto given = [&](const std::string& key) {
        const std::string flag = "--" + key;
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.empty() && a[0] != '-'; });
    if (sub == args.end()) {
        auto cmd = std::find_if(entries.begin(), entries.end(), [](const auto& e) { return e.first == "command"; });
        if (cmd == entries.end()) return args;
        args.insert(args.begin(), cmd->second);
        sub = args.begin();
    }
    std::vector<std::string> extra;
    for (const auto& [key, value] : entries) {
        if (key == "command" || given(key)) continue;
        extra.push_back("--" + key);
        extra.push_back(value);
    }
    args.insert(sub + 1, extra.begin(), extra.end());
    return args;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    std::string k_text = "1/2", realization_text = "unified", format_text = "csv", g_range_text, E_range_text,
                M_text = "1..3", basis_text = "sigmaz";
    bool no_certify = false;

    CLI::App app{"Spectral solver for the unified two-photon, two-mode and intensity-dependent Rabi models"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kToolVersion));

    auto common = [&](CLI::App* s, bool with_g) {
        s->add_option("--epsilon", cfg.epsilon, "two-level splitting")->capture_default_str();
        s->add_option("--omega", cfg.omega, "bosonic frequency")->capture_default_str();
        if (with_g) s->add_option("--g", cfg.g, "coupling strength")->capture_default_str();
        s->add_option("--k", k_text, "Bargmann index, p/q or decimal")->capture_default_str();
        s->add_option("--realization", realization_text, "unified | two-photon | two-mode | intensity-dependent")
            ->capture_default_str();
        s->add_option("--tol", cfg.tol, "tolerance (bisection width, root width or convergence)");
        s->add_option("--format", format_text, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        s->add_option("--out", cfg.out, "output file (default: console)");
        s->add_option("--jobs", cfg.jobs, "worker threads")->capture_default_str();
    };

    auto* iso = app.add_subcommand("isolated", "exact isolated solutions on the baselines");
    common(iso, false);
    iso->add_option("--M", M_text, "baseline index range a..b")->capture_default_str();
    iso->add_option("--grid", cfg.grid, "coupling grid points")->capture_default_str();

    auto* sp = app.add_subcommand("spectrum", "regular spectrum from G-function roots over a coupling sweep");
    common(sp, false);
    sp->add_option("--g-range", g_range_text, "coupling sweep a:b:n")->required();
    sp->add_option("--parity", cfg.parity, "even | odd | both")->check(CLI::IsMember({"even", "odd", "both"}))->capture_default_str();
    sp->add_option("--n-levels", cfg.n_levels, "levels per coupling")->capture_default_str();
    sp->add_option("--E-max", cfg.E_max, "energy ceiling (overrides --n-levels)");

    auto* gf = app.add_subcommand("gfun", "G-function on an energy grid, with its roots");
    common(gf, true);
    gf->add_option("--E-range", E_range_text, "energy grid a:b:n");
    gf->add_option("--parity", cfg.parity, "even | odd | both")->check(CLI::IsMember({"even", "odd", "both"}))->capture_default_str();
    gf->add_option("--n-levels", cfg.n_levels, "baselines covered by the default grid")->capture_default_str();

    auto* co = app.add_subcommand("coeffs", "expansion coefficients d_m, c_m and their decay");
    common(co, true);
    co->add_option("--E", cfg.E, "trial energy (default: selected eigenvalue)");
    co->add_option("--select", cfg.select, "lowest-odd | lowest-even")->capture_default_str();
    co->add_option("--method", cfg.method, "forward | minimal");
    co->add_option("--m-max", cfg.m_max, "highest coefficient index")->capture_default_str();
    co->add_option("--fit-lo", cfg.fit_lo, "decay fit window start")->capture_default_str();
    co->add_option("--fit-hi", cfg.fit_hi, "decay fit window end")->capture_default_str();

    auto* dg = app.add_subcommand("diag", "truncated-basis diagonalization");
    common(dg, true);
    dg->add_option("--N", cfg.N, "levels per spin branch")->capture_default_str();
    dg->add_option("--n-levels", cfg.n_levels, "eigenvalues to report")->capture_default_str();
    dg->add_option("--basis", basis_text, "sigmaz | sigmax")->check(CLI::IsMember({"sigmaz", "sigmax"}))->capture_default_str();
    dg->add_flag("--no-certify", no_certify, "skip the N vs 2N convergence check");

    std::vector<std::string> args;
    try {
        args = apply_config(std::vector<std::string>(argv + 1, argv + argc));
        std::vector<const char*> cargv{argv[0]};
        for (const auto& a : args) cargv.push_back(a.c_str());
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    Document doc;
    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.k = parse_rational(k_text);
        cfg.realization = parse_realization(realization_text);
        cfg.format = format_text == "json" ? Format::Json : Format::Csv;
        cfg.basis = basis_text == "sigmax" ? SpinBasis::SigmaX : SpinBasis::SigmaZ;
        cfg.certify = !no_certify;
        cfg.M = parse_int_range(M_text);
        if (!g_range_text.empty()) cfg.g_range = parse_range(g_range_text);
        if (!E_range_text.empty()) cfg.E_range = parse_range(E_range_text);
        doc = run_command(cfg);
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    }

    for (const std::string& w : doc.warnings) err << "warning: " << w << '\n';

    if (cfg.out.empty()) {
        if (cfg.format == Format::Json)
            write_json(doc, out);
        else
            write_console(doc, out);
        return 0;
    }

    std::ofstream file(cfg.out);
    if (!file) {
        err << "error: cannot open " << cfg.out << " for writing\n";
        return 1;
    }
    if (cfg.format == Format::Json) {
        write_json(doc, file);
    } else {
        write_csv(doc, file);
        for (const auto& [name, table] : doc.companions) {
            std::string path = cfg.out;
            const auto dot = path.rfind('.');
            const auto slash = path.rfind('/');
            if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
                path.insert(dot, "." + name);
            else
                path += "." + name + ".csv";
            std::ofstream comp(path);
            if (!comp) {
                err << "error: cannot open " << path << " for writing\n";
                return 1;
            }
            write_csv_table(doc, table, comp);
        }
    }
    return 0;
}

}  // namespace nlrabi::cli
