#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "trajpred/data.hpp"
#include "trajpred/geometry.hpp"
#include "trajpred/gradcheck.hpp"
#include "trajpred/image.hpp"
#include "trajpred/nn.hpp"

namespace trajpred {

/// Sinusoidal temporal encoding: row pos, even column 2i holds
/// sin(pos * e^(-4i/D)) and odd column 2i+1 holds cos(pos * e^(-4i/D)),
/// with D the encoding width.
template <typename T>
Tensor<T> positional_encoding(std::size_t t_obs, std::size_t pe_dim) {
    if (pe_dim == 0 || pe_dim % 2 != 0) {
        throw ConfigError("positional encoding width must be even, got " +
                          std::to_string(pe_dim));
    }
    Tensor<T> pe({t_obs, pe_dim});
    for (std::size_t pos = 0; pos < t_obs; ++pos) {
        for (std::size_t i = 0; i * 2 < pe_dim; ++i) {
            const double freq =
                std::exp(-4.0 * static_cast<double>(i) / static_cast<double>(pe_dim));
            const double arg = static_cast<double>(pos) * freq;
            pe.at(pos, 2 * i) = static_cast<T>(std::sin(arg));
            pe.at(pos, 2 * i + 1) = static_cast<T>(std::cos(arg));
        }
    }
    return pe;
}

enum class DecodeMode { teacher_forced, inference };

struct ModelConfig {
    std::size_t n_blocks = 4;
    std::size_t heads = 8;
    std::size_t d_model = 48;
    std::size_t latent_rows = 12;
    std::size_t pe_dim = 16;
    std::vector<std::size_t> pose_mlp = {2, 8, 32};
    std::vector<std::size_t> goal_mlp = {576, 256, 64, 2};
    std::vector<std::size_t> traj_mlp = {50, 256, 64, 24};
    std::size_t t_obs = 8;
    std::size_t t_pred = 12;
    std::size_t ff_mult = 4;
    bool tie_block_weights = false;

    // image path ("patch" backbone); disabled entirely for map-free runs
    bool image_enabled = false;
    std::size_t crop_size = 64;
    std::size_t patch_size = 8;
    CropSampling crop_sampling = CropSampling::bilinear;

    std::size_t patch_count() const {
        return (crop_size / patch_size) * (crop_size / patch_size);
    }

    void validate() const {
        if (pe_dim % 2 != 0) throw ConfigError("pe_dim must be even");
        if (pose_mlp.size() < 2 || pose_mlp.front() != 2) {
            throw ConfigError("pose mlp must start from 2 input coordinates");
        }
        if (pose_mlp.back() + pe_dim != d_model) {
            throw ConfigError("pose embedding (" + std::to_string(pose_mlp.back()) +
                              ") + positional encoding (" + std::to_string(pe_dim) +
                              ") must equal d_model (" + std::to_string(d_model) + ")");
        }
        if (heads == 0 || d_model % heads != 0) {
            throw ConfigError("d_model must be divisible by the head count");
        }
        if (goal_mlp.size() < 2 || goal_mlp.front() != latent_rows * d_model ||
            goal_mlp.back() != 2) {
            throw ConfigError("goal mlp must map the flattened latent (" +
                              std::to_string(latent_rows * d_model) + ") to 2");
        }
        if (traj_mlp.size() < 2 || traj_mlp.front() != d_model + 2 ||
            traj_mlp.back() != 2 * t_pred) {
            throw ConfigError("trajectory mlp must map latent row + goal (" +
                              std::to_string(d_model + 2) + ") to " +
                              std::to_string(2 * t_pred));
        }
        if (t_obs < 2) throw ConfigError("t_obs must be at least 2");
        if (latent_rows == 0 || t_pred == 0) throw ConfigError("empty latent or horizon");
        if (image_enabled) {
            if (crop_size < 2 || patch_size == 0 || crop_size % patch_size != 0) {
                throw ConfigError("crop size must be a positive multiple of patch size");
            }
        }
    }
};

/// Agent-frame model output plus the transform back to dataset coordinates.
struct Prediction {
    Vec2 goal;
    std::vector<Vec2> trajectory;
    RigidTransform2D to_agent;

    Vec2 world_goal() const { return to_agent.inverse().apply(goal); }
    std::vector<Vec2> world_trajectory() const {
        return apply_transform(to_agent.inverse(), trajectory);
    }
};

template <typename T>
struct ForwardResult {
    Value<T> goal;       // [1, 2]
    Value<T> trajectory; // [t_pred, 2]
    RigidTransform2D to_agent;
};

template <typename T>
Prediction extract_prediction(const ForwardResult<T>& r) {
    Prediction p;
    p.to_agent = r.to_agent;
    p.goal = {static_cast<double>(r.goal.value()[0]), static_cast<double>(r.goal.value()[1])};
    for (std::size_t i = 0; i < r.trajectory.rows(); ++i) {
        p.trajectory.push_back({static_cast<double>(r.trajectory.value().at(i, 0)),
                                static_cast<double>(r.trajectory.value().at(i, 1))});
    }
    return p;
}

template <typename T>
struct EncoderBlockParams {
    AttentionParams<T> agent_attn;
    AttentionParams<T> neighbor_attn;
    AttentionParams<T> image_attn; // present only on the patch variant
    ParamBlock<T>* ln1_gamma = nullptr;
    ParamBlock<T>* ln1_beta = nullptr;
    AttentionParams<T> latent_attn;
    ParamBlock<T>* ln2_gamma = nullptr;
    ParamBlock<T>* ln2_beta = nullptr;
    MlpParams<T> ff;
};

/// Agent/neighbor/image context for one scene, ready for the encoder.
template <typename T>
struct SceneTokens {
    Value<T> agent;                           // [t_obs, d_model]
    Value<T> neighbors;                       // [n*t_obs or 1, d_model]
    std::vector<std::uint8_t> neighbor_mask;  // kv-row validity
    std::optional<Value<T>> image;            // [P, d_model]
};

/// The predictor: shared pose embedding with temporal encoding, a stack of
/// encoder blocks refining a learnable latent array through cross-attention
/// over agent history, neighbors and (optionally) BEV patch tokens, and the
/// two decoding heads.
template <typename T>
class Model {
public:
    explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        pe_ = positional_encoding<T>(cfg_.t_obs, cfg_.pe_dim);
        build_params();
    }

    const ModelConfig& config() const { return cfg_; }
    ParamRegistry<T>& params() { return params_; }
    const ParamRegistry<T>& params() const { return params_; }

    void init(Rng& rng) {
        init_mlp(pose_mlp_, rng);
        init_normal(latent_init_->tensor, rng, 0.02);
        init_normal(null_token_->tensor, rng, 0.02);
        for (auto& b : block_store_) {
            init_attention(b.agent_attn, rng);
            init_attention(b.neighbor_attn, rng);
            if (cfg_.image_enabled) init_attention(b.image_attn, rng);
            b.ln1_gamma->tensor.fill(T(1));
            b.ln1_beta->tensor.zero();
            init_attention(b.latent_attn, rng);
            b.ln2_gamma->tensor.fill(T(1));
            b.ln2_beta->tensor.zero();
            init_mlp(b.ff, rng);
            // damp the residual-branch projections so the latent keeps a
            // moderate scale through the block stack
            scale_tensor(b.agent_attn.wo->tensor, kResidualInitScale);
            scale_tensor(b.neighbor_attn.wo->tensor, kResidualInitScale);
            if (cfg_.image_enabled) scale_tensor(b.image_attn.wo->tensor, kResidualInitScale);
            scale_tensor(b.latent_attn.wo->tensor, kResidualInitScale);
            scale_tensor(b.ff.weights.back()->tensor, kResidualInitScale);
        }
        init_mlp(goal_mlp_, rng);
        init_mlp(traj_mlp_, rng);
        // decoder heads start at zero output; the huge initial displacement
        // gradients of a plain Kaiming head killed ReLU capacity early
        goal_mlp_.weights.back()->tensor.zero();
        traj_mlp_.weights.back()->tensor.zero();
        if (cfg_.image_enabled) {
            init_kaiming_uniform(patch_w_->tensor, rng);
            patch_b_->tensor.zero();
            init_normal(image_pos_->tensor, rng, 0.02);
        }
    }

    /// Per-timestep pose embedding concatenated with the temporal encoding.
    /// Points must already be in the agent-centric frame.
    Value<T> embed_tokens(Graph<T>& g, const Tensor<T>& points, bool normalized_frame) const {
        if (!normalized_frame) {
            throw ContractError("embed_tokens: points must be in the agent-centric frame");
        }
        if (points.rank() != 2 || points.cols() != 2 || points.rows() == 0 ||
            points.rows() > cfg_.t_obs) {
            throw DimensionError("embed_tokens: expected [1.." + std::to_string(cfg_.t_obs) +
                                 ",2], got " + points.shape_string());
        }
        const std::size_t rows = points.rows();
        Value<T> pose = mlp(g, g.constant(points), pose_mlp_);
        Tensor<T> pe_rows({rows, cfg_.pe_dim});
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cfg_.pe_dim; ++c) pe_rows.at(r, c) = pe_.at(r, c);
        }
        return g.concat_cols({pose, g.constant(pe_rows)});
    }

    /// Builds the full token set for a scene under its normalization
    /// transform. Empty neighbor sets fall back to the learnable null token.
    SceneTokens<T> tokenize(Graph<T>& g, const Scene& scene,
                            const RigidTransform2D& to_agent) const {
        SceneTokens<T> tokens{Value<T>{}, Value<T>{}, {}, std::nullopt};
        tokens.agent =
            embed_tokens(g, to_tensor(apply_transform(to_agent, scene.observed_positions())),
                         true);

        if (scene.neighbors.empty()) {
            tokens.neighbors = g.param(*null_token_);
            tokens.neighbor_mask = {1};
        } else {
            std::vector<Value<T>> parts;
            for (const auto& n : scene.neighbors) {
                std::vector<Vec2> pts;
                pts.reserve(n.points.size());
                for (const auto& p : n.points) pts.push_back(p.pos);
                parts.push_back(embed_tokens(g, to_tensor(apply_transform(to_agent, pts)), true));
                tokens.neighbor_mask.insert(tokens.neighbor_mask.end(), n.valid.begin(),
                                            n.valid.end());
            }
            tokens.neighbors = g.concat_rows(parts);
        }

        if (cfg_.image_enabled) {
            if (!scene.image) {
                throw ContractError("image path enabled but the scene carries no image");
            }
            const BevImage crop =
                rotate_crop(*scene.image, to_agent, cfg_.crop_size, cfg_.crop_sampling);
            PatchTokens<T> patches = patchify(g, crop, cfg_.patch_size, *patch_w_, *patch_b_);
            tokens.image = g.add(patches.tokens, g.param(*image_pos_));
        }
        return tokens;
    }

    /// One encoder block: three sequential cross-attentions into the latent
    /// followed by a pre-norm latent transformer layer, residuals throughout.
    Value<T> encoder_block(Graph<T>& g, std::size_t block, Value<T> z,
                           const SceneTokens<T>& tokens) const {
        const EncoderBlockParams<T>& p = blocks_[block];
        z = g.add(z, multi_head_attention(g, z, tokens.agent, p.agent_attn, cfg_.heads));
        z = g.add(z, multi_head_attention(g, z, tokens.neighbors, p.neighbor_attn, cfg_.heads,
                                          &tokens.neighbor_mask));
        if (tokens.image) {
            z = g.add(z, multi_head_attention(g, z, *tokens.image, p.image_attn, cfg_.heads));
        }
        Value<T> h = g.layer_norm_rows(z, g.param(*p.ln1_gamma), g.param(*p.ln1_beta));
        z = g.add(z, multi_head_attention(g, h, h, p.latent_attn, cfg_.heads));
        Value<T> h2 = g.layer_norm_rows(z, g.param(*p.ln2_gamma), g.param(*p.ln2_beta));
        return g.add(z, mlp(g, h2, p.ff));
    }

    /// Runs the block stack from the learnable initial latent.
    Value<T> encode_tokens(Graph<T>& g, const SceneTokens<T>& tokens) const {
        Value<T> z = g.param(*latent_init_);
        for (std::size_t b = 0; b < cfg_.n_blocks; ++b) z = encoder_block(g, b, z, tokens);
        return z;
    }

    Value<T> encode(Graph<T>& g, const Scene& scene, const RigidTransform2D& to_agent) const {
        return encode_tokens(g, tokenize(g, scene, to_agent));
    }

    /// Flattened latent through the goal head -> [1, 2].
    Value<T> decode_goal(Graph<T>& g, Value<T> z) const {
        auto flat = g.reshape(z, {1, cfg_.latent_rows * cfg_.d_model});
        return mlp(g, flat, goal_mlp_);
    }

    /// Each latent row conditioned on the goal through the shared trajectory
    /// head; the per-row outputs are mean-pooled and laid out as [t_pred, 2].
    Value<T> decode_trajectory(Graph<T>& g, Value<T> z, Value<T> goal) const {
        std::vector<Value<T>> rows;
        rows.reserve(cfg_.latent_rows);
        for (std::size_t i = 0; i < cfg_.latent_rows; ++i) {
            auto row = g.concat_cols({g.slice_rows(z, i, i + 1), goal});
            rows.push_back(mlp(g, row, traj_mlp_));
        }
        auto pooled = g.mean_rows(g.concat_rows(rows));
        return g.reshape(pooled, {cfg_.t_pred, 2});
    }

    /// Full pass over one scene. Teacher forcing conditions the trajectory
    /// head on the normalized ground-truth goal and therefore requires the
    /// scene's future; inference conditions on the predicted goal and reads
    /// only observed data.
    ForwardResult<T> forward(Graph<T>& g, const Scene& scene, DecodeMode mode) const {
        if (scene.observed.size() != cfg_.t_obs) {
            throw ContractError("forward: scene observed length " +
                                std::to_string(scene.observed.size()) + " != t_obs " +
                                std::to_string(cfg_.t_obs));
        }
        const RigidTransform2D to_agent = heading_transform(scene.observed_positions());
        Value<T> z = encode(g, scene, to_agent);
        Value<T> goal = decode_goal(g, z);

        Value<T> conditioning = goal;
        if (mode == DecodeMode::teacher_forced) {
            if (scene.future.size() != cfg_.t_pred) {
                throw ContractError("teacher-forced decoding requested without a full "
                                    "ground-truth future");
            }
            const Vec2 gt = to_agent.apply(scene.future.back().pos);
            conditioning = g.constant(
                Tensor<T>::from({1, 2}, {static_cast<T>(gt.x), static_cast<T>(gt.y)}));
        }
        Value<T> traj = decode_trajectory(g, z, conditioning);
        return ForwardResult<T>{goal, traj, to_agent};
    }

    /// Normalized ground-truth future as a [t_pred, 2] tensor.
    Tensor<T> normalized_future(const Scene& scene, const RigidTransform2D& to_agent) const {
        if (scene.future.size() != cfg_.t_pred) {
            throw ContractError("scene future length != t_pred");
        }
        return to_tensor(apply_transform(to_agent, scene.future_positions()));
    }

    static Tensor<T> to_tensor(const std::vector<Vec2>& pts) {
        Tensor<T> t({pts.size(), 2});
        for (std::size_t i = 0; i < pts.size(); ++i) {
            t.at(i, 0) = static_cast<T>(pts[i].x);
            t.at(i, 1) = static_cast<T>(pts[i].y);
        }
        return t;
    }

    static constexpr double kResidualInitScale = 0.25;

private:
    static void scale_tensor(Tensor<T>& t, double factor) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = static_cast<T>(static_cast<double>(t[i]) * factor);
        }
    }

    void build_params() {
        pose_mlp_ = add_mlp(params_, "pose_mlp", cfg_.pose_mlp);
        latent_init_ = &params_.add("latent.init", {cfg_.latent_rows, cfg_.d_model});
        null_token_ = &params_.add("neighbors.null_token", {1, cfg_.d_model});

        const std::size_t stored = cfg_.tie_block_weights ? 1 : cfg_.n_blocks;
        for (std::size_t b = 0; b < stored; ++b) {
            const std::string prefix =
                cfg_.tie_block_weights ? "block_shared" : "block" + std::to_string(b);
            EncoderBlockParams<T> block;
            block.agent_attn = add_attention(params_, prefix + ".agent_attn", cfg_.d_model,
                                             cfg_.d_model);
            block.neighbor_attn = add_attention(params_, prefix + ".neighbor_attn",
                                                cfg_.d_model, cfg_.d_model);
            if (cfg_.image_enabled) {
                block.image_attn = add_attention(params_, prefix + ".image_attn", cfg_.d_model,
                                                 cfg_.d_model);
            }
            block.ln1_gamma = &params_.add(prefix + ".latent.ln1.gamma", {cfg_.d_model});
            block.ln1_beta = &params_.add(prefix + ".latent.ln1.beta", {cfg_.d_model});
            block.latent_attn = add_attention(params_, prefix + ".latent.attn", cfg_.d_model,
                                              cfg_.d_model);
            block.ln2_gamma = &params_.add(prefix + ".latent.ln2.gamma", {cfg_.d_model});
            block.ln2_beta = &params_.add(prefix + ".latent.ln2.beta", {cfg_.d_model});
            block.ff = add_mlp(params_, prefix + ".latent.ff",
                               {cfg_.d_model, cfg_.ff_mult * cfg_.d_model, cfg_.d_model});
            block_store_.push_back(block);
        }
        for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
            blocks_.push_back(cfg_.tie_block_weights ? block_store_[0] : block_store_[b]);
        }

        goal_mlp_ = add_mlp(params_, "goal_mlp", cfg_.goal_mlp);
        traj_mlp_ = add_mlp(params_, "traj_mlp", cfg_.traj_mlp);
        if (cfg_.image_enabled) {
            const std::size_t flat = cfg_.patch_size * cfg_.patch_size * 3;
            patch_w_ = &params_.add("image.patch_proj.w", {flat, cfg_.d_model});
            patch_b_ = &params_.add("image.patch_proj.b", {cfg_.d_model});
            image_pos_ = &params_.add("image.pos_emb", {cfg_.patch_count(), cfg_.d_model});
        }
    }

    ModelConfig cfg_;
    ParamRegistry<T> params_;
    Tensor<T> pe_;
    MlpParams<T> pose_mlp_;
    ParamBlock<T>* latent_init_ = nullptr;
    ParamBlock<T>* null_token_ = nullptr;
    std::vector<EncoderBlockParams<T>> block_store_;
    std::vector<EncoderBlockParams<T>> blocks_;
    MlpParams<T> goal_mlp_;
    MlpParams<T> traj_mlp_;
    ParamBlock<T>* patch_w_ = nullptr;
    ParamBlock<T>* patch_b_ = nullptr;
    ParamBlock<T>* image_pos_ = nullptr;
};

} // namespace trajpred
