#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trajpred/data.hpp"
#include "trajpred/geometry.hpp"
#include "trajpred/model.hpp"

namespace trajpred {

/// Mean Euclidean displacement over all agents and predicted steps.
inline double ade(const std::vector<std::vector<Vec2>>& preds,
                  const std::vector<std::vector<Vec2>>& gts) {
    if (preds.empty()) throw ContractError("ade: empty prediction set");
    if (preds.size() != gts.size()) throw ContractError("ade: pred/gt count mismatch");
    double sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
        if (preds[j].size() != gts[j].size() || preds[j].empty()) {
            throw ContractError("ade: horizon mismatch at scene " + std::to_string(j));
        }
        for (std::size_t t = 0; t < preds[j].size(); ++t) {
            sum += distance(preds[j][t], gts[j][t]);
            ++steps;
        }
    }
    return sum / static_cast<double>(steps);
}

/// Mean Euclidean displacement at the final predicted step.
inline double fde(const std::vector<std::vector<Vec2>>& preds,
                  const std::vector<std::vector<Vec2>>& gts) {
    if (preds.empty()) throw ContractError("fde: empty prediction set");
    if (preds.size() != gts.size()) throw ContractError("fde: pred/gt count mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
        if (preds[j].empty() || gts[j].empty()) throw ContractError("fde: empty horizon");
        sum += distance(preds[j].back(), gts[j].back());
    }
    return sum / static_cast<double>(preds.size());
}

/// Constant-velocity extrapolation from the last two observed points.
inline std::vector<Vec2> linear_baseline(const std::vector<Vec2>& observed,
                                         std::size_t t_pred = 12) {
    if (observed.size() < 2) {
        throw ContractError("linear baseline: need at least 2 observed points, got " +
                            std::to_string(observed.size()));
    }
    const Vec2 delta = observed.back() - observed[observed.size() - 2];
    std::vector<Vec2> out;
    out.reserve(t_pred);
    for (std::size_t k = 1; k <= t_pred; ++k) {
        out.push_back(observed.back() + delta * static_cast<double>(k));
    }
    return out;
}

struct SceneError {
    std::string dataset;
    long long agent_id = 0;
    long long start_frame = 0;
    double ade = 0.0;
    double fde = 0.0;
    Vec2 final_err_norm; // prediction minus ground truth, agent-centric frame
};

struct FoldMetrics {
    std::string name;
    Units units = Units::meters;
    std::size_t n = 0;
    double ade = 0.0;
    double fde = 0.0;
};

struct MetricReport {
    std::vector<FoldMetrics> folds;
    FoldMetrics mean;
    std::vector<SceneError> scenes;
};

namespace detail {

inline std::vector<const Scene*> ordered(const std::vector<Scene>& scenes) {
    std::vector<const Scene*> out;
    out.reserve(scenes.size());
    for (const auto& s : scenes) out.push_back(&s);
    std::stable_sort(out.begin(), out.end(), [](const Scene* a, const Scene* b) {
        if (a->dataset != b->dataset) return a->dataset < b->dataset;
        if (a->agent_id != b->agent_id) return a->agent_id < b->agent_id;
        return a->start_frame < b->start_frame;
    });
    return out;
}

} // namespace detail

/// Evaluates a predictor over test scenes in deterministic order. The
/// callback receives one scene and returns its world-frame trajectory
/// prediction of t_pred points.
template <typename PredictFn>
MetricReport evaluate_scenes(const std::vector<Scene>& test, const std::string& fold_name,
                             PredictFn&& predict) {
    if (test.empty()) throw ContractError("evaluate: no test scenes");
    MetricReport report;
    FoldMetrics fold;
    fold.name = fold_name;
    fold.units = test.front().units;
    std::vector<std::vector<Vec2>> preds, gts;
    for (const Scene* scene : detail::ordered(test)) {
        std::vector<Vec2> world_pred = predict(*scene);
        std::vector<Vec2> gt = scene->future_positions();
        if (world_pred.size() != gt.size()) {
            throw ContractError("evaluate: prediction horizon mismatch");
        }
        SceneError err;
        err.dataset = scene->dataset;
        err.agent_id = scene->agent_id;
        err.start_frame = scene->start_frame;
        err.ade = ade({world_pred}, {gt});
        err.fde = distance(world_pred.back(), gt.back());
        const auto tf = heading_transform(scene->observed_positions());
        err.final_err_norm = tf.apply(world_pred.back()) - tf.apply(gt.back());
        report.scenes.push_back(err);
        preds.push_back(std::move(world_pred));
        gts.push_back(std::move(gt));
    }
    fold.n = preds.size();
    fold.ade = ade(preds, gts);
    fold.fde = fde(preds, gts);
    report.folds.push_back(fold);
    report.mean = fold;
    report.mean.name = "mean";
    return report;
}

/// Inference-mode model evaluation in dataset units.
template <typename T>
MetricReport evaluate_model(const Model<T>& model, const std::vector<Scene>& test,
                            const std::string& fold_name) {
    return evaluate_scenes(test, fold_name, [&](const Scene& scene) {
        Graph<T> g;
        auto result = model.forward(g, scene, DecodeMode::inference);
        return extract_prediction(result).world_trajectory();
    });
}

inline MetricReport evaluate_baseline(const std::vector<Scene>& test,
                                      const std::string& fold_name, std::size_t t_pred = 12) {
    return evaluate_scenes(test, fold_name, [&](const Scene& scene) {
        return linear_baseline(scene.observed_positions(), t_pred);
    });
}

/// Concatenates per-fold reports; the mean row averages fold metrics.
inline MetricReport merge_reports(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw ContractError("merge_reports: nothing to merge");
    MetricReport out;
    for (const auto& r : reports) {
        out.folds.insert(out.folds.end(), r.folds.begin(), r.folds.end());
        out.scenes.insert(out.scenes.end(), r.scenes.begin(), r.scenes.end());
    }
    out.mean.name = "mean";
    out.mean.units = out.folds.front().units;
    for (const auto& f : out.folds) {
        out.mean.ade += f.ade;
        out.mean.fde += f.fde;
        out.mean.n += f.n;
    }
    out.mean.ade /= static_cast<double>(out.folds.size());
    out.mean.fde /= static_cast<double>(out.folds.size());
    return out;
}

// ---- final-error distribution -------------------------------------------------

/// Nearest-rank empirical quantile: q(p) = sorted[ceil(p*n) - 1].
inline double quantile_nearest_rank(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw ContractError("quantile of an empty sample");
    if (p <= 0.0) return sorted.front();
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    return sorted[std::min(sorted.size() - 1, rank == 0 ? 0 : rank - 1)];
}

struct ErrorDistribution {
    // 1-D final displacement errors
    std::vector<double> fde_sorted;
    double median = 0.0;
    std::vector<std::pair<double, double>> quantiles; // (p, value)
    std::size_t hist_bins = 0;
    double hist_min = 0.0;
    double hist_max = 0.0;
    std::vector<std::size_t> hist_counts;

    // 2-D final-error point cloud in the normalized frame with a Gaussian
    // kernel density estimate (Scott's rule bandwidth) on a regular grid
    std::vector<Vec2> points;
    std::size_t grid_n = 0;
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    std::vector<double> density;                 // grid_n * grid_n, row-major in y
    std::vector<double> contour_mass;            // e.g. 0.5, 0.75, 0.9
    std::vector<double> contour_levels;          // density level enclosing that mass
};

inline ErrorDistribution error_distribution(const MetricReport& report,
                                            std::size_t hist_bins = 30,
                                            std::size_t grid_n = 64) {
    if (report.scenes.empty()) throw ContractError("error_distribution: no per-scene records");
    ErrorDistribution dist;
    for (const auto& s : report.scenes) {
        dist.fde_sorted.push_back(s.fde);
        dist.points.push_back(s.final_err_norm);
    }
    std::sort(dist.fde_sorted.begin(), dist.fde_sorted.end());
    dist.median = quantile_nearest_rank(dist.fde_sorted, 0.5);
    for (double p : {0.25, 0.5, 0.75, 0.9}) {
        dist.quantiles.push_back({p, quantile_nearest_rank(dist.fde_sorted, p)});
    }

    dist.hist_bins = hist_bins;
    dist.hist_min = dist.fde_sorted.front();
    dist.hist_max = dist.fde_sorted.back();
    dist.hist_counts.assign(hist_bins, 0);
    const double span = std::max(dist.hist_max - dist.hist_min, 1e-12);
    for (double v : dist.fde_sorted) {
        auto bin = static_cast<std::size_t>((v - dist.hist_min) / span *
                                            static_cast<double>(hist_bins));
        dist.hist_counts[std::min(bin, hist_bins - 1)] += 1;
    }

    const double n = static_cast<double>(dist.points.size());
    double mx = 0.0, my = 0.0;
    for (const Vec2& p : dist.points) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double sx = 0.0, sy = 0.0;
    for (const Vec2& p : dist.points) {
        sx += (p.x - mx) * (p.x - mx);
        sy += (p.y - my) * (p.y - my);
    }
    sx = std::sqrt(sx / std::max(1.0, n - 1.0));
    sy = std::sqrt(sy / std::max(1.0, n - 1.0));
    const double scott = std::pow(n, -1.0 / 6.0); // d=2
    const double hx = std::max(sx * scott, 1e-9);
    const double hy = std::max(sy * scott, 1e-9);

    dist.grid_n = grid_n;
    double lo_x = dist.points[0].x, hi_x = lo_x, lo_y = dist.points[0].y, hi_y = lo_y;
    for (const Vec2& p : dist.points) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    dist.x0 = lo_x - 3.0 * hx;
    dist.x1 = hi_x + 3.0 * hx;
    dist.y0 = lo_y - 3.0 * hy;
    dist.y1 = hi_y + 3.0 * hy;
    dist.density.assign(grid_n * grid_n, 0.0);
    const double norm = 1.0 / (n * 2.0 * M_PI * hx * hy);
    for (std::size_t gy = 0; gy < grid_n; ++gy) {
        const double y = dist.y0 + (dist.y1 - dist.y0) * (static_cast<double>(gy) + 0.5) /
                                       static_cast<double>(grid_n);
        for (std::size_t gx = 0; gx < grid_n; ++gx) {
            const double x = dist.x0 + (dist.x1 - dist.x0) * (static_cast<double>(gx) + 0.5) /
                                           static_cast<double>(grid_n);
            double acc = 0.0;
            for (const Vec2& p : dist.points) {
                const double dx = (x - p.x) / hx;
                const double dy = (y - p.y) / hy;
                acc += std::exp(-0.5 * (dx * dx + dy * dy));
            }
            dist.density[gy * grid_n + gx] = acc * norm;
        }
    }

    // density levels whose superlevel sets enclose the requested mass
    const double cell = ((dist.x1 - dist.x0) / static_cast<double>(grid_n)) *
                        ((dist.y1 - dist.y0) / static_cast<double>(grid_n));
    std::vector<double> sorted_density = dist.density;
    std::sort(sorted_density.begin(), sorted_density.end(), std::greater<double>());
    dist.contour_mass = {0.5, 0.75, 0.9};
    for (double mass : dist.contour_mass) {
        double acc = 0.0;
        double level = sorted_density.back();
        for (double d : sorted_density) {
            acc += d * cell;
            if (acc >= mass) {
                level = d;
                break;
            }
        }
        dist.contour_levels.push_back(level);
    }
    return dist;
}

} // namespace trajpred
