#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "trajpred/checkpoint.hpp"
#include "trajpred/data.hpp"
#include "trajpred/eval.hpp"
#include "trajpred/model.hpp"
#include "trajpred/rng.hpp"

namespace trajpred {

struct TrainConfig {
    std::size_t batch_size = 32;
    double lr0 = 5e-4;
    double lr_decay = 0.2;
    std::size_t lr_decay_every = 30;
    std::size_t epochs = 65;
    double lambda = 0.5;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    std::string precision = "fast"; // fast (float32) or check (float64)

    void validate() const {
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
        if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be positive");
        if (lr_decay_every == 0) throw ConfigError("lr_decay_every must be positive");
        if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
        if (val_fraction < 0.0 || val_fraction >= 1.0) {
            throw ConfigError("val_fraction must be in [0, 1)");
        }
        if (precision != "fast" && precision != "check") {
            throw ConfigError("precision must be fast or check, got '" + precision + "'");
        }
    }
};

/// Step-decayed learning rate: lr0 * decay^floor(epoch / every).
inline double lr_schedule(std::size_t epoch, const TrainConfig& cfg) {
    const double k = std::floor(static_cast<double>(epoch) /
                                static_cast<double>(cfg.lr_decay_every));
    return cfg.lr0 * std::pow(cfg.lr_decay, k);
}

/// Combined displacement loss: mean per-step distance between trajectories
/// plus lambda times the goal's final-step distance. Inputs must share one
/// (agent-centric) frame.
inline double combined_loss(const std::vector<Vec2>& trajectory, Vec2 goal,
                            const std::vector<Vec2>& gt_future, double lambda) {
    if (trajectory.size() != gt_future.size() || gt_future.empty()) {
        throw ContractError("loss: trajectory length " + std::to_string(trajectory.size()) +
                            " vs ground truth " + std::to_string(gt_future.size()));
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
        sum += distance(trajectory[t], gt_future[t]);
    }
    const double l_ade = sum / static_cast<double>(trajectory.size());
    const double l_fde = distance(goal, gt_future.back());
    return l_ade + lambda * l_fde;
}

inline double combined_loss(const Prediction& pred, const std::vector<Vec2>& gt_future,
                            double lambda) {
    return combined_loss(pred.trajectory, pred.goal, gt_future, lambda);
}

/// Differentiable twin of combined_loss on the tape.
template <typename T>
Value<T> loss_graph(Graph<T>& g, const ForwardResult<T>& result,
                    const Tensor<T>& gt_future_norm, T lambda) {
    if (gt_future_norm.rows() != result.trajectory.rows()) {
        throw ContractError("loss: horizon mismatch");
    }
    auto gt = g.constant(gt_future_norm);
    auto l_ade = g.mean_all(g.row_norms(g.sub(result.trajectory, gt)));
    const std::size_t last = gt_future_norm.rows() - 1;
    auto gt_last = g.constant(Tensor<T>::from(
        {1, 2}, {gt_future_norm.at(last, 0), gt_future_norm.at(last, 1)}));
    auto l_fde = g.row_norms(g.sub(result.goal, gt_last));
    return g.add(l_ade, g.scale(l_fde, lambda));
}

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double lr = 0.0;
    double val_ade = std::numeric_limits<double>::quiet_NaN();
    double val_fde = std::numeric_limits<double>::quiet_NaN();
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    double wall_seconds = 0.0;
    std::string final_checkpoint;
    std::string best_checkpoint;
    double best_val_ade = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::string epoch_json(const EpochRecord& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "{\"epoch\":" << r.epoch << ",\"loss\":" << r.train_loss << ",\"lr\":" << r.lr;
    if (std::isfinite(r.val_ade)) {
        os << ",\"val_ade\":" << r.val_ade << ",\"val_fde\":" << r.val_fde;
    }
    os << "}";
    return os.str();
}

} // namespace detail

/// End-to-end optimization: teacher-forced decoding, the combined
/// displacement loss, Adam with the step-decay schedule, seeded shuffling
/// and a held-out validation slice for best-checkpoint selection.
/// Checkpoints are written at the end of every epoch, so a training abort
/// keeps the last completed epoch on disk.
template <typename T>
TrainReport train(Model<T>& model, const std::vector<Scene>& scenes, const TrainConfig& cfg,
                  const std::string& out_dir, std::ostream* progress = nullptr) {
    cfg.validate();
    if (scenes.empty()) throw ContractError("train: no scenes");
    std::filesystem::create_directories(out_dir);
    const auto t_start = std::chrono::steady_clock::now();

    TrainReport report;
    report.final_checkpoint = out_dir + "/checkpoint.ckpt";
    report.best_checkpoint = out_dir + "/best.ckpt";
    const std::map<std::string, double> meta = {
        {"seed", static_cast<double>(cfg.seed)},
        {"lambda", cfg.lambda},
    };

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t n_val = 0;
    if (cfg.val_fraction > 0.0 && scenes.size() >= 2) {
        n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(cfg.val_fraction *
                                                     static_cast<double>(scenes.size()))));
        n_val = std::min(n_val, scenes.size() - 1);
    }
    std::vector<Scene> val_scenes;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < n_val) {
            val_scenes.push_back(scenes[order[i]]);
        } else {
            train_idx.push_back(order[i]);
        }
    }

    save_checkpoint(report.final_checkpoint, model.params(), meta);
    save_checkpoint(report.best_checkpoint, model.params(), meta);
    double best_score = std::numeric_limits<double>::infinity();

    AdamState<T> adam;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_schedule(epoch, cfg);
        rng.shuffle(train_idx);
        double loss_sum = 0.0;
        for (std::size_t b0 = 0; b0 < train_idx.size(); b0 += cfg.batch_size) {
            const std::size_t b1 = std::min(b0 + cfg.batch_size, train_idx.size());
            model.params().zero_grad();
            for (std::size_t i = b0; i < b1; ++i) {
                const Scene& scene = scenes[train_idx[i]];
                Graph<T> g;
                auto fwd = model.forward(g, scene, DecodeMode::teacher_forced);
                const Tensor<T> gt = model.normalized_future(scene, fwd.to_agent);
                auto loss = loss_graph(g, fwd, gt, static_cast<T>(cfg.lambda));
                const double loss_value = static_cast<double>(loss.value()[0]);
                if (!std::isfinite(loss_value)) {
                    throw TrainingError(
                        "non-finite loss at epoch " + std::to_string(epoch) +
                        "; checkpoint of the last completed epoch retained");
                }
                loss_sum += loss_value;
                g.backward(loss);
            }
            model.params().scale_grad(static_cast<T>(1.0 / static_cast<double>(b1 - b0)));
            adam_step(model.params(), adam, static_cast<T>(lr));
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
        if (!val_scenes.empty()) {
            auto val = evaluate_model(model, val_scenes, "val");
            rec.val_ade = val.mean.ade;
            rec.val_fde = val.mean.fde;
        }
        report.epochs.push_back(rec);
        if (progress) (*progress) << detail::epoch_json(rec) << "\n" << std::flush;

        save_checkpoint(report.final_checkpoint, model.params(), meta);
        const double score = val_scenes.empty() ? rec.train_loss : rec.val_ade;
        if (score < best_score) {
            best_score = score;
            report.best_val_ade = rec.val_ade;
            save_checkpoint(report.best_checkpoint, model.params(), meta);
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

} // namespace trajpred
