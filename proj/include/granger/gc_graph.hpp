#pragma once

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "granger/estimation.hpp"
#include "granger/gc.hpp"
#include "granger/inference.hpp"

namespace granger {

/// One entry of a Granger-causal graph: the statistic for the ordered pair
/// (x <- y), conditioned on all remaining variables.
struct GcCell {
    int x = 0;  ///< target variable (0-based)
    int y = 0;  ///< source variable (0-based)
    std::optional<int> tau;  ///< single-lag variant
    std::optional<int> h;    ///< multi-step / full-future variants
    double value = 0.0;
    std::optional<int> dof;
    std::optional<double> p_value;
    std::optional<bool> significant;
};

struct GcGraph {
    GcVariant variant = GcVariant::single_lag;
    int n = 0;
    int p = 0;
    double alpha = 0.05;
    SignificanceSpec::Correction correction = SignificanceSpec::Correction::bonferroni;
    int hypotheses = 0;                    ///< m in the Bonferroni correction
    std::optional<int> effective_samples;  ///< sample graphs only
    std::optional<double> critical;        ///< critical GC level (statistic units)
    std::vector<GcCell> cells;             ///< sorted by (x, y, tau/h)
};

struct GraphOptions {
    GcVariant variant = GcVariant::single_lag;
    double alpha = 0.05;
    bool bonferroni = true;
    std::vector<int> horizons;  ///< multi-step sweep; defaults to 1..p
    double tol = 1e-10;         ///< full-future stopping tolerance
    int hmax = 256;             ///< full-future horizon cap
    std::optional<int> q;       ///< analytic reduction depth; default auto
    int jobs = 1;
};

namespace detail {

template <typename Body>
void parallel_for(int count, int jobs, Body&& body) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline void sort_cells(std::vector<GcCell>& cells) {
    std::sort(cells.begin(), cells.end(), [](const GcCell& a, const GcCell& b) {
        return std::make_tuple(a.x, a.y, a.tau.value_or(0), a.h.value_or(0)) <
               std::make_tuple(b.x, b.y, b.tau.value_or(0), b.h.value_or(0));
    });
}

}  // namespace detail

/// Granger-causal graph from data: every ordered pair (x <- y), x != y, with
/// z = all remaining variables; single-lag sweeps tau = 1..p, multi-step
/// sweeps the requested horizons. Cells are evaluated concurrently up to
/// `jobs` threads and merged in deterministic (x, y, tau/h) order.
inline GcGraph gc_graph(const TimeSeries& ts, int p, const GraphOptions& opt) {
    if (ts.n() < 2) throw ArgumentError("gc_graph: need at least two variables");
    const int n = ts.n();
    GcGraph graph;
    graph.variant = opt.variant;
    graph.n = n;
    graph.p = p;
    graph.alpha = opt.alpha;
    graph.correction = opt.bonferroni ? SignificanceSpec::Correction::bonferroni
                                      : SignificanceSpec::Correction::none;

    const LaggedRegression reg(ts, p);
    graph.effective_samples = reg.rows();

    std::vector<int> horizons = opt.horizons;
    if (horizons.empty() && opt.variant == GcVariant::multi_step)
        for (int h = 1; h <= p; ++h) horizons.push_back(h);

    int dof = 0;
    switch (opt.variant) {
        case GcVariant::one_step:
            graph.hypotheses = n * (n - 1);
            dof = p;
            break;
        case GcVariant::single_lag:
            graph.hypotheses = p * n * (n - 1);
            dof = 1;
            break;
        case GcVariant::multi_step:
            graph.hypotheses = n * (n - 1) * static_cast<int>(horizons.size());
            break;
        case GcVariant::full_future:
            graph.hypotheses = 0;  // not a calibrated test statistic
            break;
    }
    SignificanceSpec spec{opt.alpha, graph.correction, std::max(1, graph.hypotheses)};
    if (opt.variant == GcVariant::one_step || opt.variant == GcVariant::single_lag)
        graph.critical = critical_level(spec, reg.rows(), dof);

    auto decide = [&](GcResult& res) {
        return res.p_value ? std::optional<bool>(*res.p_value < spec.effective_alpha())
                           : std::nullopt;
    };
    auto cell_from = [&](int x, int y, const GcResult& res, std::optional<bool> sig) {
        GcCell cell;
        cell.x = x;
        cell.y = y;
        if (res.variant == GcVariant::single_lag) cell.tau = res.horizon;
        if (res.variant == GcVariant::multi_step || res.variant == GcVariant::full_future)
            cell.h = res.horizon;
        cell.value = res.value;
        cell.dof = res.dof;
        cell.p_value = res.p_value;
        cell.significant = sig;
        return cell;
    };

    std::vector<std::vector<GcCell>> buckets;
    switch (opt.variant) {
        case GcVariant::one_step: {
            buckets.resize(static_cast<std::size_t>(n));
            detail::parallel_for(n, opt.jobs, [&](int y) {
                for (int x = 0; x < n; ++x) {
                    if (x == y) continue;
                    auto part = Partition::conditional(n, {x}, {y});
                    auto res = detail::onestep_sample_impl(reg, part);
                    buckets[static_cast<std::size_t>(y)].push_back(
                        cell_from(x, y, res, decide(res)));
                }
            });
            break;
        }
        case GcVariant::single_lag: {
            buckets.resize(static_cast<std::size_t>(n) * p);
            detail::parallel_for(n * p, opt.jobs, [&](int task) {
                const int y = task / p;
                const int tau = task % p + 1;
                for (int x = 0; x < n; ++x) {
                    if (x == y) continue;
                    auto part = Partition::conditional(n, {x}, {y});
                    auto res = detail::singlelag_sample_impl(reg, part, tau);
                    buckets[static_cast<std::size_t>(task)].push_back(
                        cell_from(x, y, res, decide(res)));
                }
            });
            break;
        }
        case GcVariant::multi_step: {
            const int nh = static_cast<int>(horizons.size());
            buckets.resize(static_cast<std::size_t>(n) * nh);
            detail::parallel_for(n * nh, opt.jobs, [&](int task) {
                const int y = task / nh;
                const int h = horizons[static_cast<std::size_t>(task % nh)];
                for (int x = 0; x < n; ++x) {
                    if (x == y) continue;
                    auto part = Partition::conditional(n, {x}, {y});
                    auto res = detail::multistep_sample_impl(reg, part, h);
                    buckets[static_cast<std::size_t>(task)].push_back(
                        cell_from(x, y, res, decide(res)));
                }
            });
            break;
        }
        case GcVariant::full_future: {
            // plug-in estimate: analytic full-future trace of the fitted model
            const auto fitted = fit_var_ols(ts, p);
            const int q = opt.q ? *opt.q : default_autocov_lags(fitted.model);
            buckets.resize(static_cast<std::size_t>(n) * (n - 1));
            std::vector<std::pair<int, int>> pairs;
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    if (x != y) pairs.emplace_back(x, y);
            detail::parallel_for(static_cast<int>(pairs.size()), opt.jobs, [&](int task) {
                const auto [x, y] = pairs[static_cast<std::size_t>(task)];
                auto part = Partition::conditional(n, {x}, {y});
                const auto trace = gc_fullfuture(fitted.model, part, opt.tol, opt.hmax, q);
                for (int h = 1; h <= trace.horizons(); ++h) {
                    GcCell cell;
                    cell.x = x;
                    cell.y = y;
                    cell.h = h;
                    cell.value = trace.values[static_cast<std::size_t>(h - 1)];
                    buckets[static_cast<std::size_t>(task)].push_back(cell);
                }
            });
            break;
        }
    }
    for (auto& bucket : buckets)
        graph.cells.insert(graph.cells.end(), bucket.begin(), bucket.end());
    detail::sort_cells(graph.cells);
    return graph;
}

/// Granger-causal graph from model parameters (no sampling metadata).
inline GcGraph gc_graph_analytic(const VarModel& model, const GraphOptions& opt) {
    if (model.n() < 2) throw ArgumentError("gc_graph_analytic: need at least two variables");
    const int n = model.n();
    const int p = model.p();
    const int q = opt.q ? *opt.q : default_autocov_lags(model);
    GcGraph graph;
    graph.variant = opt.variant;
    graph.n = n;
    graph.p = p;
    graph.alpha = opt.alpha;
    graph.correction = opt.bonferroni ? SignificanceSpec::Correction::bonferroni
                                      : SignificanceSpec::Correction::none;
    graph.hypotheses = 0;

    std::vector<int> horizons = opt.horizons;
    if (horizons.empty() && opt.variant == GcVariant::multi_step)
        for (int h = 1; h <= p; ++h) horizons.push_back(h);

    std::vector<std::vector<GcCell>> buckets;
    auto plain_cell = [](int x, int y, std::optional<int> tau, std::optional<int> h,
                         double value) {
        GcCell cell;
        cell.x = x;
        cell.y = y;
        cell.tau = tau;
        cell.h = h;
        cell.value = value;
        return cell;
    };
    switch (opt.variant) {
        case GcVariant::one_step: {
            buckets.resize(static_cast<std::size_t>(n));
            detail::parallel_for(n, opt.jobs, [&](int y) {
                const auto red = reduced_model_yw(model, {y}, q);
                for (int x = 0; x < n; ++x) {
                    if (x == y) continue;
                    const auto x_red = detail::positions_in(red.retained, {x});
                    const double value =
                        detail::logdet_block(red.model.sigma(), x_red, "gc_graph_analytic") -
                        detail::logdet_block(model.sigma(), {x}, "gc_graph_analytic");
                    buckets[static_cast<std::size_t>(y)].push_back(plain_cell(
                        x, y, std::nullopt, std::nullopt,
                        detail::clamp_gc(value, "gc_graph_analytic")));
                }
            });
            break;
        }
        case GcVariant::single_lag: {
            buckets.resize(static_cast<std::size_t>(n) * p);
            detail::parallel_for(n * p, opt.jobs, [&](int task) {
                const int y = task / p;
                const int tau = task % p + 1;
                const Mat sigma_red = reduced_sigma_single_lag(model, {y}, tau, q);
                for (int x = 0; x < n; ++x) {
                    if (x == y) continue;
                    const double value =
                        detail::logdet_block(sigma_red, {x}, "gc_graph_analytic") -
                        detail::logdet_block(model.sigma(), {x}, "gc_graph_analytic");
                    buckets[static_cast<std::size_t>(task)].push_back(plain_cell(
                        x, y, tau, std::nullopt, detail::clamp_gc(value, "gc_graph_analytic")));
                }
            });
            break;
        }
        case GcVariant::multi_step: {
            buckets.resize(static_cast<std::size_t>(n));
            const int hmax = horizons.empty()
                                 ? 1
                                 : *std::max_element(horizons.begin(), horizons.end());
            const auto ma_full = ma_coefficients(model, hmax - 1);
            detail::parallel_for(n, opt.jobs, [&](int y) {
                const auto red = reduced_model_yw(model, {y}, q);
                const auto ma_red = ma_coefficients(red.model, hmax - 1);
                for (int h : horizons) {
                    const Mat cov_full = multistep_error_cov(ma_full, model.sigma(), h);
                    const Mat cov_red = multistep_error_cov(ma_red, red.model.sigma(), h);
                    for (int x = 0; x < n; ++x) {
                        if (x == y) continue;
                        const auto x_red = detail::positions_in(red.retained, {x});
                        const double value =
                            detail::logdet_block(cov_red, x_red, "gc_graph_analytic") -
                            detail::logdet_block(cov_full, {x}, "gc_graph_analytic");
                        buckets[static_cast<std::size_t>(y)].push_back(plain_cell(
                            x, y, std::nullopt, h, detail::clamp_gc(value, "gc_graph_analytic")));
                    }
                }
            });
            break;
        }
        case GcVariant::full_future: {
            std::vector<std::pair<int, int>> pairs;
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    if (x != y) pairs.emplace_back(x, y);
            buckets.resize(pairs.size());
            detail::parallel_for(static_cast<int>(pairs.size()), opt.jobs, [&](int task) {
                const auto [x, y] = pairs[static_cast<std::size_t>(task)];
                auto part = Partition::conditional(n, {x}, {y});
                const auto trace = gc_fullfuture(model, part, opt.tol, opt.hmax, q);
                for (int h = 1; h <= trace.horizons(); ++h)
                    buckets[static_cast<std::size_t>(task)].push_back(plain_cell(
                        x, y, std::nullopt, h, trace.values[static_cast<std::size_t>(h - 1)]));
            });
            break;
        }
    }
    for (auto& bucket : buckets)
        graph.cells.insert(graph.cells.end(), bucket.begin(), bucket.end());
    detail::sort_cells(graph.cells);
    return graph;
}

}  // namespace granger
