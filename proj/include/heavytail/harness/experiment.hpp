#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "../version.hpp"
#include "config.hpp"

namespace heavytail::harness {

struct GridPoint {
    long long n = 0;
    long long m = 0;
    double N = 0.0;  // m - n mu, lattice aligned
    std::string error;
};

struct ResultRow {
    std::string family;
    std::string params;
    long long n = 0;
    double N = 0.0;
    std::string regime;
    std::optional<double> N_star, N_2star, x_nr, eta_n, t_n, xi_n, hess_det;
    std::optional<double> estimate_log, v_term_log, h_term_log, exact_log, ratio_log;
    std::string diagnostics;
    bool failed = false;
};

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols = {
        "family",     "params",       "n",          "N",          "regime",     "N_star",
        "N_2star",    "x_nr",         "eta_n",      "t_n",        "xi_n",       "hess_det",
        "estimate_log", "v_term_log", "h_term_log", "exact_log",  "ratio_log",  "diagnostics"};
    return cols;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline void append(std::string& diag, const std::string& item) {
    if (!diag.empty()) diag += "; ";
    diag += item;
}

// Runs f(i) for i in [0, count) on `jobs` threads.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& f) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) f(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace detail

inline std::string params_string(const ExperimentConfig& c) {
    if (c.family == "stretched") return "alpha=" + format_double(c.parameter);
    if (c.family == "loghazard") return "beta=" + format_double(c.parameter);
    return "p=0.5";
}

// Targets in config order: n outer, N rule entries inner.
inline std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg, const Law& law) {
    std::vector<GridPoint> pts;
    auto push = [&](long long n, double target) {
        GridPoint g;
        g.n = n;
        g.m = std::llround(n * law.mu() + target);
        g.N = g.m - n * law.mu();
        pts.push_back(g);
    };
    for (long long n : cfg.n_list) {
        const double dn = static_cast<double>(n);
        switch (cfg.rule) {
        case NRule::Absolute:
            for (double N : cfg.N_values) push(n, N);
            break;
        case NRule::Power:
            for (double A : cfg.A)
                for (double th : cfg.theta)
                    for (double ga : cfg.gamma) push(n, A * std::pow(dn, th) * std::pow(std::log(dn), ga));
            break;
        case NRule::Scale: {
            double ref = 0.0;
            std::string err;
            try {
                ref = cfg.scale == "N_star" ? critical_N_star(law, dn) : critical_N_doublestar(law, dn);
            } catch (const Error& e) {
                err = std::string("scale unavailable: ") + e.what();
            }
            for (double A : cfg.A) {
                if (err.empty()) {
                    push(n, A * ref);
                } else {
                    pts.push_back({n, 0, 0.0, err});
                }
            }
            break;
        }
        }
    }
    return pts;
}

inline ResultRow compute_row(const Law& law, const ExperimentConfig& cfg, const GridPoint& g) {
    ResultRow row;
    row.family = cfg.family;
    row.params = params_string(cfg);
    row.n = g.n;
    row.N = g.N;
    if (!g.error.empty()) {
        row.failed = true;
        row.diagnostics = "error: " + g.error;
        return row;
    }
    const double n = static_cast<double>(g.n);
    EstimateConfig ec = cfg.estimate;
    ec.order = cfg.r;

    try {
        row.N_star = critical_N_star(law, n);
        row.N_2star = critical_N_doublestar(law, n);
    } catch (const Error& e) {
        detail::append(row.diagnostics, std::string("scales: ") + e.what());
    }

    try {
        const auto e = estimate_auto(law, n, g.N, ec);
        row.regime = to_string(e.regime);
        row.estimate_log = e.log_value;
        row.v_term_log = e.v_term_log;
        row.h_term_log = e.h_term_log;
        row.x_nr = e.x_nr;
        if (e.saddle) {
            row.t_n = e.saddle->t;
            row.xi_n = e.saddle->xi;
            row.hess_det = e.saddle->hess_det;
        }
        detail::append(row.diagnostics, "r=" + std::to_string(e.r_used));
        for (const auto& note : e.notes) detail::append(row.diagnostics, note);
    } catch (const Error& e) {
        row.failed = true;
        detail::append(row.diagnostics, std::string("error: ") + e.what());
        return row;
    }

    if (ec.with_saddle) {
        try {
            row.eta_n = eta_n(law, n, g.N, law.cum.r, ec.contour);
        } catch (const Error& e) {
            detail::append(row.diagnostics, std::string("eta_n unavailable: ") + e.what());
        }
    }

    // big-jump comparison: sqrt(n sigma^2) q'(N) and log of estimate / (n p(N))
    if (g.N > 0.0) {
        const auto bj = estimate_bigjump_simple(law, n, g.N);
        detail::append(row.diagnostics, "bigjump_diag=" + format_double(bj.diagnostic));
        detail::append(row.diagnostics, "np_ratio_log=" + format_double(*row.estimate_log - bj.log_value));
    }

    if (cfg.oracle) {
        if (g.m > cfg.m_max) {
            detail::append(row.diagnostics, "oracle skipped: m=" + std::to_string(g.m) + " above m_max");
        } else {
            try {
                const auto ex = exact_point_prob(law.model, g.n, g.m);
                row.exact_log = ex.log_prob;
                row.ratio_log = *row.estimate_log - ex.log_prob;
            } catch (const Error& e) {
                detail::append(row.diagnostics, std::string("oracle: ") + e.what());
            }
        }
    }

    for (auto* f : {&row.N_star, &row.N_2star, &row.x_nr, &row.eta_n, &row.t_n, &row.xi_n, &row.hess_det,
                    &row.estimate_log, &row.v_term_log, &row.h_term_log, &row.exact_log, &row.ratio_log})
        if (*f && !std::isfinite(**f)) {
            f->reset();
            row.failed = true;
            detail::append(row.diagnostics, "error: non-finite value");
        }
    return row;
}

inline std::vector<ResultRow> run_rows(const Law& law, const ExperimentConfig& cfg, unsigned jobs = 1,
                                       const std::function<void(const ResultRow&)>& on_row = {}) {
    const auto grid = expand_grid(cfg, law);
    std::vector<ResultRow> rows(grid.size());
    std::mutex mu;
    detail::parallel_for(grid.size(), jobs, [&](std::size_t i) {
        rows[i] = compute_row(law, cfg, grid[i]);
        if (on_row) {
            std::lock_guard lock(mu);
            on_row(rows[i]);
        }
    });
    return rows;
}

inline void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    const auto& cols = result_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : rows) {
        using detail::opt_num;
        os << r.family << ',' << detail::csv_field(r.params) << ',' << r.n << ',' << format_double(r.N) << ','
           << r.regime << ',' << opt_num(r.N_star) << ',' << opt_num(r.N_2star) << ',' << opt_num(r.x_nr) << ','
           << opt_num(r.eta_n) << ',' << opt_num(r.t_n) << ',' << opt_num(r.xi_n) << ',' << opt_num(r.hess_det)
           << ',' << opt_num(r.estimate_log) << ',' << opt_num(r.v_term_log) << ',' << opt_num(r.h_term_log)
           << ',' << opt_num(r.exact_log) << ',' << opt_num(r.ratio_log) << ','
           << detail::csv_field(r.diagnostics) << '\n';
    }
}

inline std::string rows_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    write_rows_csv(os, rows);
    return os.str();
}

inline nlohmann::ordered_json manifest(const ExperimentConfig& cfg, const std::string& command,
                                       std::size_t rows, std::size_t failures) {
    nlohmann::ordered_json j;
    j["schema"] = "manifest_v1";
    j["library_version"] = version;
    j["command"] = command;
    j["config_hash"] = config_hash(cfg);
    j["rows"] = rows;
    j["row_failures"] = failures;
    j["csv"] = cfg.csv;
    auto& tol = j["tolerances"];
    tol["model.tail_eps"] = cfg.tail_eps;
    tol["estimate.r_threshold"] = cfg.estimate.r_threshold;
    tol["thresholds.eps1"] = cfg.estimate.thresholds.eps1;
    tol["thresholds.eps2"] = cfg.estimate.thresholds.eps2;
    tol["thresholds.clt_floor"] = cfg.estimate.thresholds.clt_floor;
    tol["truncated.min_ratio"] = cfg.estimate.truncated.min_ratio;
    tol["truncated.bound_K"] = cfg.estimate.truncated.bound_K;
    tol["truncated.delta"] = cfg.estimate.truncated.delta;
    tol["contour.delta_cutoff"] = cfg.estimate.contour.delta_cutoff;
    tol["contour.inner_rel_tol"] = cfg.estimate.contour.inner_rel_tol;
    tol["contour.outer_rel_tol"] = cfg.estimate.contour.outer_rel_tol;
    tol["root.rel_tol"] = 1e-13;
    tol["convolution.max_length"] = ConvolutionOptions{}.max_length;
    auto& set = j["settings"];
    for (const auto& [k, v] : settings(cfg)) set[k] = v;
    return j;
}

struct RunSummary {
    std::size_t rows = 0;
    std::size_t failures = 0;
    std::filesystem::path csv_path, manifest_path;
    int exit_code() const { return failures ? 2 : 0; }
};

// Writes the CSV and manifest into out_dir. Row errors are recorded in the
// diagnostics column and reported through the exit code.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 unsigned jobs = 1, const std::function<void(const ResultRow&)>& on_row = {}) {
    const Law law = build_law(cfg);
    const auto rows = run_rows(law, cfg, jobs, on_row);
    RunSummary s;
    s.rows = rows.size();
    s.failures = static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed; }));
    std::filesystem::create_directories(out_dir);
    s.csv_path = out_dir / cfg.csv;
    s.manifest_path = out_dir / cfg.manifest;
    std::ofstream(s.csv_path, std::ios::binary) << rows_csv(rows);
    std::ofstream(s.manifest_path, std::ios::binary) << manifest(cfg, "sweep", s.rows, s.failures).dump(2) << '\n';
    return s;
}

struct ScaleRow {
    long long n = 0;
    std::optional<double> x_star, N_star, N_2star, t_star;
    std::optional<double> x_star_ref, N_star_ref, N_2star_ref;
    std::string ref_kind;  // closed | asymptote
    std::string diagnostics;
};

inline const std::vector<std::string>& scale_columns() {
    static const std::vector<std::string> cols = {
        "n",          "x_star",     "N_star",     "N_2star",     "t_star",
        "x_star_ref", "N_star_ref", "N_2star_ref", "ref_kind",    "x_star_dev",
        "N_star_dev", "N_2star_dev", "N_star_over_2x_star", "diagnostics"};
    return cols;
}

inline std::vector<ScaleRow> scales_report(const Law& law, const std::vector<long long>& n_list, unsigned jobs = 1) {
    std::vector<ScaleRow> rows(n_list.size());
    detail::parallel_for(n_list.size(), jobs, [&](std::size_t i) {
        ScaleRow& r = rows[i];
        r.n = n_list[i];
        const double n = static_cast<double>(r.n);
        try {
            r.x_star = inflection_x_star(law, n);
            r.t_star = law.model.jet_raw(*r.x_star).d1;
            r.N_star = *r.x_star + n * law.sigma2() * *r.t_star;
            r.N_2star = critical_N_doublestar(law, n);
        } catch (const Error& e) {
            detail::append(r.diagnostics, e.what());
        }
        if (auto ref = reference_scales(law, n)) {
            r.x_star_ref = ref->x_star;
            r.N_star_ref = ref->N_star;
            r.N_2star_ref = ref->N_2star;
            r.ref_kind = ref->exact ? "closed" : "asymptote";
        }
    });
    return rows;
}

inline void write_scales_csv(std::ostream& os, const std::vector<ScaleRow>& rows) {
    const auto& cols = scale_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    auto dev = [](const std::optional<double>& v, const std::optional<double>& ref) -> std::optional<double> {
        if (!v || !ref) return std::nullopt;
        return *v / *ref - 1.0;
    };
    for (const auto& r : rows) {
        using detail::opt_num;
        std::optional<double> ratio;
        if (r.x_star && r.N_star) ratio = *r.N_star / (2.0 * *r.x_star);
        os << r.n << ',' << opt_num(r.x_star) << ',' << opt_num(r.N_star) << ',' << opt_num(r.N_2star) << ','
           << opt_num(r.t_star) << ',' << opt_num(r.x_star_ref) << ',' << opt_num(r.N_star_ref) << ','
           << opt_num(r.N_2star_ref) << ',' << r.ref_kind << ',' << opt_num(dev(r.x_star, r.x_star_ref)) << ','
           << opt_num(dev(r.N_star, r.N_star_ref)) << ',' << opt_num(dev(r.N_2star, r.N_2star_ref)) << ','
           << opt_num(ratio) << ',' << detail::csv_field(r.diagnostics) << '\n';
    }
}

} // namespace heavytail::harness
