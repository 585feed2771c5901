#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <thread>

#include <heavytail/harness/experiment.hpp>

namespace ht = heavytail;
namespace hh = heavytail::harness;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    unsigned jobs = 1;
    std::string log_level = "info";
};

hh::ExperimentConfig load(const Common& c, bool require_n = true) {
    if (c.config.empty()) {
        hh::ExperimentConfig cfg;
        for (const auto& kv : c.sets) hh::apply_override(cfg, kv);
        if (require_n) hh::validate(cfg);
        return cfg;
    }
    return hh::load_config(c.config, c.sets);
}

// Writes to <out>/<name>, or to stdout when no directory was given.
void emit(const Common& c, const std::string& name, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / name, std::ios::binary) << text;
    spdlog::info("wrote {}", (fs::path(c.out) / name).string());
}

int cmd_sweep(const Common& c) {
    const auto cfg = load(c);
    spdlog::info("sweep: family={} {} n values, config {}", cfg.family, cfg.n_list.size(), hh::config_hash(cfg));
    const auto s = hh::run_experiment(cfg, c.out.empty() ? fs::path(".") : fs::path(c.out), c.jobs,
                                      [](const hh::ResultRow& r) {
                                          if (r.failed)
                                              spdlog::warn("n={} N={}: {}", r.n, r.N, r.diagnostics);
                                          else
                                              spdlog::debug("n={} N={} done", r.n, r.N);
                                      });
    spdlog::info("{} rows, {} failed; csv {}", s.rows, s.failures, s.csv_path.string());
    return s.exit_code();
}

int cmd_estimate(const Common& c, long long n, double N) {
    auto cfg = load(c, false);
    cfg.n_list = {n};
    cfg.rule = hh::NRule::Absolute;
    cfg.N_values = {N};
    hh::validate(cfg);
    const auto law = hh::build_law(cfg);
    const auto rows = hh::run_rows(law, cfg, 1);
    emit(c, cfg.csv, hh::rows_csv(rows));
    if (rows.front().failed) spdlog::warn("{}", rows.front().diagnostics);
    return rows.front().failed ? 2 : 0;
}

int cmd_scales(const Common& c) {
    const auto cfg = load(c);
    const auto law = hh::build_law(cfg);
    const auto rows = hh::scales_report(law, cfg.n_list, c.jobs);
    std::ostringstream os;
    hh::write_scales_csv(os, rows);
    emit(c, "scales.csv", os.str());
    const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.x_star; });
    return failed ? 2 : 0;
}

int cmd_validate(const Common& c, std::vector<double> grid) {
    const auto cfg = load(c, false);
    const auto model = hh::build_model(cfg);
    if (grid.empty()) {
        // the assumptions are asymptotic; the default grid starts well inside the regular range
        const double lo = std::max({model.a() + 1.0, model.concave_from(), model.regular_from(), 1e3});
        for (double x = lo; x < 1e12 * lo; x *= 2.0) grid.push_back(x);
    }
    const auto rep = ht::validate_assumptions(model, grid);
    std::ostringstream os;
    os << "item,pass,detail\n";
    for (const auto& it : rep.items)
        os << it.id << ',' << (it.pass ? "true" : "false") << ',' << hh::detail::csv_field(it.detail) << '\n';
    os << "c1," << ht::format_double(rep.c1) << ",\nc2," << ht::format_double(rep.c2) << ",\nc3,"
       << ht::format_double(rep.c3) << ",\nc4," << ht::format_double(rep.c4) << ",\n";
    emit(c, "assumptions.csv", os.str());
    return rep.passed() ? 0 : 2;
}

int cmd_oracle(const Common& c, long long n) {
    const auto cfg = load(c, false);
    const auto model = ht::normalized(hh::build_model(cfg), cfg.tail_eps);
    const auto pmf = ht::convolve_exact(model, n, cfg.m_max);
    std::ostringstream os;
    ht::write_csv(os, pmf);
    emit(c, "oracle_n" + std::to_string(n) + ".csv", os.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local large deviations for heavy-tailed lattice sums"};
    app.require_subcommand(1);
    Common c;
    c.jobs = std::max(1u, std::thread::hardware_concurrency());

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "config file (INI), '-' for stdin");
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--set", c.sets, "override section.key=value")->allow_extra_args(false);
        sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--log-level", c.log_level, "trace, debug, info, warn, error, off");
    };

    auto* sweep = app.add_subcommand("sweep", "evaluate a (n, N) grid");
    common(sweep);

    long long n = 0;
    double N = 0.0;
    auto* est = app.add_subcommand("estimate", "evaluate a single point");
    common(est);
    est->add_option("--n", n, "number of summands")->required();
    est->add_option("--N", N, "overshoot above n mu")->required();

    auto* scales = app.add_subcommand("scales", "critical scales table");
    common(scales);

    std::vector<double> grid;
    auto* val = app.add_subcommand("validate", "hazard assumption report");
    common(val);
    val->add_option("--grid", grid, "evaluation points");

    long long on = 0;
    auto* orc = app.add_subcommand("oracle", "exact convolution pmf");
    common(orc);
    orc->add_option("--n", on, "number of summands")->required();

    CLI11_PARSE(app, argc, argv);

    auto logger = spdlog::stderr_color_mt("heavytail");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(c.log_level));

    try {
        if (*sweep) return cmd_sweep(c);
        if (*est) return cmd_estimate(c, n, N);
        if (*scales) return cmd_scales(c);
        if (*val) return cmd_validate(c, grid);
        if (*orc) return cmd_oracle(c, on);
    } catch (const ht::ConfigError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
