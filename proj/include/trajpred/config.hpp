#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/model.hpp"
#include "trajpred/train.hpp"

namespace trajpred {

/// Flat declarative `key = value` text config. '#' starts a comment,
/// whitespace around keys and values is ignored, later keys override
/// earlier ones.
class ConfigMap {
public:
    ConfigMap() = default;
    explicit ConfigMap(std::map<std::string, std::string> values)
        : values_(std::move(values)) {}

    static ConfigMap parse(std::istream& is) {
        std::map<std::string, std::string> values;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos) {
                throw ParseError("config line " + std::to_string(line_no) +
                                 ": expected 'key = value', got '" + trimmed + "'");
            }
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) {
                throw ParseError("config line " + std::to_string(line_no) + ": empty key");
            }
            values[key] = value;
        }
        return ConfigMap(std::move(values));
    }

    static ConfigMap parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config file '" + path + "'");
        return parse(is);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected a number, got '" +
                              it->second + "'");
        }
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        const double v = get_double(key, static_cast<double>(fallback));
        if (v < 0 || v != std::floor(v)) {
            throw ConfigError("config key '" + key + "': expected a non-negative integer");
        }
        return static_cast<std::size_t>(v);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stoull(it->second);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected an unsigned integer");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config key '" + key + "': expected true/false, got '" + it->second +
                          "'");
    }

    std::vector<std::size_t> get_size_list(const std::string& key,
                                           std::vector<std::size_t> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::size_t> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) continue;
            try {
                out.push_back(std::stoull(t));
            } catch (const std::exception&) {
                throw ConfigError("config key '" + key + "': expected a comma list of integers");
            }
        }
        if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
        return out;
    }

    void require_known(const std::set<std::string>& known, const std::string& what) const {
        for (const auto& [key, value] : values_) {
            if (!known.count(key)) {
                throw ConfigError(what + " config: unknown key '" + key + "'");
            }
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    std::map<std::string, std::string> values_;
};

inline ModelConfig model_config_from(const ConfigMap& cfg) {
    cfg.require_known({"n_blocks", "heads", "d_model", "latent_rows", "pe_dim", "pose_mlp",
                       "goal_mlp", "traj_mlp", "t_obs", "t_pred", "ff_mult",
                       "tie_block_weights", "image_enabled", "crop_size", "patch_size",
                       "crop_sampling"},
                      "model");
    ModelConfig m;
    m.n_blocks = cfg.get_size("n_blocks", m.n_blocks);
    m.heads = cfg.get_size("heads", m.heads);
    m.d_model = cfg.get_size("d_model", m.d_model);
    m.latent_rows = cfg.get_size("latent_rows", m.latent_rows);
    m.pe_dim = cfg.get_size("pe_dim", m.pe_dim);
    m.pose_mlp = cfg.get_size_list("pose_mlp", m.pose_mlp);
    m.goal_mlp = cfg.get_size_list("goal_mlp", m.goal_mlp);
    m.traj_mlp = cfg.get_size_list("traj_mlp", m.traj_mlp);
    m.t_obs = cfg.get_size("t_obs", m.t_obs);
    m.t_pred = cfg.get_size("t_pred", m.t_pred);
    m.ff_mult = cfg.get_size("ff_mult", m.ff_mult);
    m.tie_block_weights = cfg.get_bool("tie_block_weights", m.tie_block_weights);
    m.image_enabled = cfg.get_bool("image_enabled", m.image_enabled);
    m.crop_size = cfg.get_size("crop_size", m.crop_size);
    m.patch_size = cfg.get_size("patch_size", m.patch_size);
    const std::string sampling = cfg.get_str("crop_sampling", "bilinear");
    if (sampling == "nearest") {
        m.crop_sampling = CropSampling::nearest;
    } else if (sampling == "bilinear") {
        m.crop_sampling = CropSampling::bilinear;
    } else {
        throw ConfigError("crop_sampling must be nearest or bilinear, got '" + sampling + "'");
    }
    m.validate();
    return m;
}

inline TrainConfig train_config_from(const ConfigMap& cfg) {
    cfg.require_known({"batch_size", "lr0", "lr_decay", "lr_decay_every", "epochs", "lambda",
                       "seed", "val_fraction", "precision"},
                      "train");
    TrainConfig t;
    t.batch_size = cfg.get_size("batch_size", t.batch_size);
    t.lr0 = cfg.get_double("lr0", t.lr0);
    t.lr_decay = cfg.get_double("lr_decay", t.lr_decay);
    t.lr_decay_every = cfg.get_size("lr_decay_every", t.lr_decay_every);
    t.epochs = cfg.get_size("epochs", t.epochs);
    t.lambda = cfg.get_double("lambda", t.lambda);
    t.seed = cfg.get_u64("seed", t.seed);
    t.val_fraction = cfg.get_double("val_fraction", t.val_fraction);
    t.precision = cfg.get_str("precision", t.precision);
    t.validate();
    return t;
}

} // namespace trajpred
