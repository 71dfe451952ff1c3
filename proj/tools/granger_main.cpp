// granger: simulate stationary VAR processes, fit them from data, and compute
// Granger-Geweke causality statistics (one-step, multi-step, full-future,
// single-lag) analytically or from time series.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "granger/demo.hpp"
#include "granger/estimation.hpp"
#include "granger/gc.hpp"
#include "granger/gc_graph.hpp"
#include "granger/inference.hpp"
#include "granger/io.hpp"
#include "granger/simulation.hpp"
#include "granger/var_model.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct Options {
    std::string model_path;
    std::string data_path;
    std::string out_path;
    std::string report_path;
    std::uint64_t seed = 0;
    bool demo = false;
    double rho_self = granger::kDemoRhoSelf;
    int T = 1000;
    std::optional<int> burnin;
    std::optional<int> p;
    int pmax = 0;
    std::string criterion = "bic";
    std::string variant = "singlelag";
    std::string horizons = "";
    bool analytic = false;
    double alpha = 0.05;
    bool bonferroni = false;
    std::optional<int> q;
    double tol = 1e-10;
    int hmax = 256;
    int jobs = 1;
    std::string format = "json";
};

std::vector<int> parse_horizons(const std::string& text) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto token = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                         : comma - start);
        if (!token.empty()) {
            const auto dots = token.find("..");
            if (dots != std::string::npos) {
                const int lo = std::stoi(token.substr(0, dots));
                const int hi = std::stoi(token.substr(dots + 2));
                if (lo < 1 || hi < lo) throw granger::ArgumentError("bad horizon range: " + token);
                for (int h = lo; h <= hi; ++h) out.push_back(h);
            } else {
                out.push_back(std::stoi(token));
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

granger::VarModel input_model(const Options& opt) {
    if (opt.demo) return granger::demo_model(opt.rho_self);
    if (opt.model_path.empty())
        throw granger::ArgumentError("need --model PATH or --demo");
    return granger::load_model(opt.model_path);
}

std::string model_hash_hex(const granger::VarModel& model) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      granger::fnv1a64(granger::model_to_json(model).dump())));
    return buf;
}

int cmd_simulate(const Options& opt) {
    if (opt.T < 1) throw granger::ArgumentError("simulate: --T must be >= 1");
    const auto model = input_model(opt);
    const int burnin = opt.burnin ? *opt.burnin : granger::default_burnin(model);
    const auto ts = granger::simulate(model, opt.T, opt.seed, burnin);
    const std::string out = opt.out_path.empty() ? "-" : opt.out_path;
    if (out == "-")
        std::cout << granger::timeseries_to_csv(ts);
    else
        granger::write_file(out, granger::timeseries_to_csv(ts));
    std::cerr << "model " << model_hash_hex(model) << " seed " << opt.seed << " burn-in "
              << burnin << "\n";
    return kExitOk;
}

int cmd_fit(const Options& opt) {
    if (opt.data_path.empty()) throw granger::ArgumentError("fit: need --data PATH");
    const auto ts = granger::load_timeseries(opt.data_path);
    const auto criterion = [&] {
        if (opt.criterion == "aic") return granger::OrderCriterion::aic;
        if (opt.criterion == "bic") return granger::OrderCriterion::bic;
        throw granger::ArgumentError("fit: --criterion must be aic or bic");
    };
    nlohmann::json report;
    int order = 0;
    if (opt.p) {
        order = *opt.p;
        report["mode"] = "fixed";
    } else {
        if (opt.pmax < 1) throw granger::ArgumentError("fit: need --p or --pmax");
        const auto crit = criterion();
        nlohmann::json values = nlohmann::json::array();
        for (int cand = 1; cand <= opt.pmax; ++cand) {
            const auto fit = granger::fit_var_ols(ts, cand);
            const double N = fit.effective_samples;
            const double n2 = static_cast<double>(ts.n()) * ts.n();
            const double penalty =
                crit == granger::OrderCriterion::aic ? 2.0 : std::log(N);
            values.push_back({{"p", cand},
                              {"logdet", fit.log_generalized_variance},
                              {"value", fit.log_generalized_variance + penalty * cand * n2 / N}});
        }
        order = granger::select_order(ts, opt.pmax, crit);
        report["mode"] = "selected";
        report["criterion"] = opt.criterion;
        report["values"] = std::move(values);
    }
    const auto fit = granger::fit_var_ols(ts, order);
    report["p"] = order;
    report["logdet"] = fit.log_generalized_variance;
    report["N"] = fit.effective_samples;
    const std::string out = opt.out_path.empty() ? "model.json" : opt.out_path;
    granger::write_file(out, granger::fit_result_to_json(fit).dump(2) + "\n");
    const std::string report_out =
        opt.report_path.empty() ? out + ".report.json" : opt.report_path;
    granger::write_file(report_out, report.dump(2) + "\n");
    std::cerr << "fitted order " << order << " (N = " << fit.effective_samples << ") -> " << out
              << ", report -> " << report_out << "\n";
    return kExitOk;
}

granger::GcVariant parse_variant(const std::string& name) {
    if (name == "onestep") return granger::GcVariant::one_step;
    if (name == "multistep") return granger::GcVariant::multi_step;
    if (name == "fullfuture") return granger::GcVariant::full_future;
    if (name == "singlelag") return granger::GcVariant::single_lag;
    throw granger::ArgumentError("unknown variant: " + name);
}

int cmd_gc(const Options& opt) {
    granger::GraphOptions gopt;
    gopt.variant = parse_variant(opt.variant);
    gopt.alpha = opt.alpha;
    gopt.bonferroni = opt.bonferroni;
    if (!opt.horizons.empty()) gopt.horizons = parse_horizons(opt.horizons);
    gopt.tol = opt.tol;
    gopt.hmax = opt.hmax;
    gopt.q = opt.q;
    gopt.jobs = opt.jobs;

    granger::GcGraph graph;
    if (opt.analytic) {
        graph = granger::gc_graph_analytic(input_model(opt), gopt);
    } else {
        if (opt.data_path.empty())
            throw granger::ArgumentError("gc: need --data PATH (or --analytic with --model)");
        if (!opt.p) throw granger::ArgumentError("gc: need --p for sample statistics");
        graph = granger::gc_graph(granger::load_timeseries(opt.data_path), *opt.p, gopt);
    }
    const std::string text = opt.format == "csv" ? granger::graph_to_csv(graph)
                                                 : granger::graph_to_json(graph).dump(2) + "\n";
    if (opt.out_path.empty() || opt.out_path == "-")
        std::cout << text;
    else
        granger::write_file(opt.out_path, text);
    return kExitOk;
}

int cmd_reproduce(const Options& opt) {
    namespace fs = std::filesystem;
    const fs::path dir = opt.out_path.empty() ? fs::path("reproduce") : fs::path(opt.out_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw granger::IoError("cannot create " + dir.string());

    const int T = opt.T, p = granger::kDemoOrder, q = 175, h_top = 32;
    const double alpha = 0.05;
    const auto model = granger::demo_model(opt.rho_self);
    const int n = model.n();
    const int m = p * n * (n - 1);

    // fig2: analytic multi-step and full-future curves for every ordered pair
    std::string fig2 = "pair,h,F_multistep,F_fullfuture\n";
    std::vector<int> hs(h_top);
    for (int h = 1; h <= h_top; ++h) hs[static_cast<std::size_t>(h - 1)] = h;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            const auto part = granger::Partition::conditional(n, {x}, {y});
            const auto ms = granger::gc_multistep_trace(model, part, hs, q);
            const auto ff = granger::gc_fullfuture(model, part, 1e-300, h_top, q);
            for (int h = 1; h <= h_top; ++h) {
                fig2 += std::to_string(y + 1) + "->" + std::to_string(x + 1) + "," +
                        std::to_string(h) + "," +
                        granger::detail::format_double(
                            ms[static_cast<std::size_t>(h - 1)].value) +
                        "," +
                        granger::detail::format_double(
                            ff.values[static_cast<std::size_t>(h - 1)]) +
                        "\n";
            }
        }
    granger::write_file((dir / "fig2.csv").string(), fig2);

    // fig3: sample single-lag graph at T = 1000 against the analytic values
    const int burnin = granger::default_burnin(model);
    const auto ts = granger::simulate(model, T, opt.seed, burnin);
    granger::GraphOptions sl;
    sl.variant = granger::GcVariant::single_lag;
    sl.alpha = alpha;
    sl.bonferroni = true;
    sl.q = q;
    sl.jobs = opt.jobs;
    const auto sample_graph = granger::gc_graph(ts, p, sl);
    const auto analytic_graph = granger::gc_graph_analytic(model, sl);
    if (sample_graph.cells.size() != analytic_graph.cells.size())
        throw granger::NumericalError("reproduce: graph cell counts disagree");
    std::string fig3 = "x,y,tau,F_sample,F_analytic,critical_level,significant\n";
    const double critical = sample_graph.critical.value();
    for (std::size_t i = 0; i < sample_graph.cells.size(); ++i) {
        const auto& sc = sample_graph.cells[i];
        const auto& ac = analytic_graph.cells[i];
        fig3 += std::to_string(sc.x + 1) + "," + std::to_string(sc.y + 1) + "," +
                std::to_string(sc.tau.value()) + "," + granger::detail::format_double(sc.value) +
                "," + granger::detail::format_double(ac.value) + "," +
                granger::detail::format_double(critical) + "," +
                (sc.significant.value() ? "true" : "false") + "\n";
    }
    granger::write_file((dir / "fig3.csv").string(), fig3);

    nlohmann::json manifest{{"T", T},
                            {"p", p},
                            {"q", q},
                            {"alpha", alpha},
                            {"correction", "bonferroni"},
                            {"m", m},
                            {"seed", opt.seed},
                            {"burnin", burnin},
                            {"rho_self", opt.rho_self},
                            {"h_grid", {1, h_top}},
                            {"model_hash", model_hash_hex(model)},
                            {"model", granger::model_to_json(model)}};
    granger::write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cerr << "wrote " << (dir / "fig2.csv").string() << ", " << (dir / "fig3.csv").string()
              << ", " << (dir / "manifest.json").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granger-Geweke causality for stationary VAR processes"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--model", opt.model_path, "model JSON path");
        cmd->add_option("--data", opt.data_path, "time-series CSV path");
        cmd->add_option("-o,--output", opt.out_path, "output path ('-' = stdout)");
        cmd->add_option("--seed", opt.seed, "RNG seed (GRANGER_SEED overrides)");
        cmd->add_option("--jobs", opt.jobs, "worker threads for sweeps");
        cmd->add_option("--format", opt.format, "json or csv")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    auto* sim = app.add_subcommand("simulate", "simulate a VAR model to CSV");
    add_common(sim);
    sim->add_flag("--demo", opt.demo, "use the built-in 5-variable demo model");
    sim->add_option("--rho-self", opt.rho_self, "demo lag-1 self-regression");
    sim->add_option("--T", opt.T, "samples to emit");
    sim->add_option("--burnin", [&](const std::vector<std::string>& v) {
        opt.burnin = std::stoi(v.front());
        return true;
    }, "burn-in steps (default: automatic)");

    auto* fit = app.add_subcommand("fit", "fit a VAR model from CSV data");
    add_common(fit);
    fit->add_option("--p", [&](const std::vector<std::string>& v) {
        opt.p = std::stoi(v.front());
        return true;
    }, "fixed model order (skips selection)");
    fit->add_option("--pmax", opt.pmax, "maximum order for selection");
    fit->add_option("--criterion", opt.criterion, "aic or bic")
        ->check(CLI::IsMember({"aic", "bic"}));
    fit->add_option("--report", opt.report_path, "order-selection report path");

    auto* gc = app.add_subcommand("gc", "compute a Granger-causal graph");
    add_common(gc);
    gc->add_option("--variant", opt.variant, "onestep | multistep | fullfuture | singlelag")
        ->check(CLI::IsMember({"onestep", "multistep", "fullfuture", "singlelag"}));
    gc->add_flag("--analytic", opt.analytic, "compute from model parameters (--model/--demo)");
    gc->add_flag("--demo", opt.demo, "use the built-in demo model");
    gc->add_option("--rho-self", opt.rho_self, "demo lag-1 self-regression");
    gc->add_option("--p", [&](const std::vector<std::string>& v) {
        opt.p = std::stoi(v.front());
        return true;
    }, "fit order for sample statistics");
    gc->add_option("--h", opt.horizons, "multi-step horizons, e.g. 1..32 or 1,2,4");
    gc->add_option("--alpha", opt.alpha, "significance level");
    gc->add_flag("--bonferroni", opt.bonferroni, "Bonferroni-correct over all cells");
    gc->add_option("--q", [&](const std::vector<std::string>& v) {
        opt.q = std::stoi(v.front());
        return true;
    }, "autocovariance lags for analytic reductions (default: automatic)");
    gc->add_option("--tol", opt.tol, "full-future stopping tolerance");
    gc->add_option("--hmax", opt.hmax, "full-future horizon cap");

    auto* rep = app.add_subcommand("reproduce", "write the demo figure-data bundle");
    add_common(rep);
    rep->add_option("--T", opt.T, "sample length for the inference figure");
    rep->add_option("--rho-self", opt.rho_self, "demo lag-1 self-regression");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (const char* env_seed = std::getenv("GRANGER_SEED")) {
        try {
            opt.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            std::cerr << "error: GRANGER_SEED is not a valid unsigned integer\n";
            return kExitUsage;
        }
    }

    try {
        if (sim->parsed()) return cmd_simulate(opt);
        if (fit->parsed()) return cmd_fit(opt);
        if (gc->parsed()) return cmd_gc(opt);
        if (rep->parsed()) return cmd_reproduce(opt);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const granger::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const granger::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const granger::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
