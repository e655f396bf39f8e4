#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/params.hpp"

namespace trajpred {

// Parameter checkpoint container, little-endian throughout:
//   magic "TJPCKPT\0", u32 version (=1), u64 record_count, then per record:
//     u32 name_len, name bytes, u32 rank, u64 dims[rank], f64 data[prod(dims)]
// Records appear in parameter registration order; "__meta.<key>" records
// (shape [1]) carry run metadata such as the seed.
inline constexpr char kCheckpointMagic[8] = {'T', 'J', 'P', 'C', 'K', 'P', 'T', '\0'};

namespace detail {

inline void write_record(std::ostream& os, const std::string& name,
                         const std::vector<std::size_t>& shape, const double* data,
                         std::size_t count) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&name_len), 4);
    os.write(name.data(), name_len);
    const std::uint32_t rank = static_cast<std::uint32_t>(shape.size());
    os.write(reinterpret_cast<const char*>(&rank), 4);
    for (std::size_t d : shape) {
        const std::uint64_t v = d;
        os.write(reinterpret_cast<const char*>(&v), 8);
    }
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
}

} // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const ParamRegistry<T>& params,
                     const std::map<std::string, double>& meta = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint '" + path + "' for writing");
    os.write(kCheckpointMagic, 8);
    const std::uint32_t version = 1;
    os.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t count = params.block_count() + meta.size();
    os.write(reinterpret_cast<const char*>(&count), 8);
    for (std::size_t b = 0; b < params.block_count(); ++b) {
        const auto& block = params.block(b);
        std::vector<double> data(block.tensor.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            data[i] = static_cast<double>(block.tensor[i]);
        }
        detail::write_record(os, block.name, block.tensor.shape(), data.data(), data.size());
    }
    for (const auto& [key, value] : meta) {
        detail::write_record(os, "__meta." + key, {1}, &value, 1);
    }
    if (!os) throw IoError("failed while writing checkpoint '" + path + "'");
}

/// Every record as (name -> float64 tensor), metadata included.
inline std::map<std::string, Tensor<double>> read_checkpoint_raw(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw LoadError("'" + path + "' is not a parameter checkpoint");
    }
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) {
        throw LoadError("checkpoint version " + std::to_string(version) + " unsupported");
    }
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), 8);
    std::map<std::string, Tensor<double>> records;
    for (std::uint64_t r = 0; r < count; ++r) {
        std::uint32_t name_len = 0;
        is.read(reinterpret_cast<char*>(&name_len), 4);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint32_t rank = 0;
        is.read(reinterpret_cast<char*>(&rank), 4);
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (auto& d : shape) {
            std::uint64_t v = 0;
            is.read(reinterpret_cast<char*>(&v), 8);
            d = static_cast<std::size_t>(v);
            total *= d;
        }
        std::vector<double> data(total);
        is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(total * 8));
        if (!is) throw LoadError("checkpoint '" + path + "': truncated record '" + name + "'");
        records.emplace(name, Tensor<double>::from(shape, std::move(data)));
    }
    return records;
}

/// Loads a checkpoint into an existing registry. Every registered block must
/// be present with a matching shape, and no unknown parameter records may
/// remain.
template <typename T>
std::map<std::string, double> load_checkpoint(const std::string& path,
                                              ParamRegistry<T>& params) {
    auto records = read_checkpoint_raw(path);
    std::map<std::string, double> meta;
    std::size_t used = 0;
    for (std::size_t b = 0; b < params.block_count(); ++b) {
        auto& block = params.block(b);
        auto it = records.find(block.name);
        if (it == records.end()) {
            throw LoadError("checkpoint '" + path + "': missing parameter '" + block.name + "'");
        }
        if (it->second.shape() != block.tensor.shape()) {
            throw LoadError("checkpoint '" + path + "': parameter '" + block.name + "' has shape " +
                            it->second.shape_string() + ", model expects " +
                            block.tensor.shape_string());
        }
        for (std::size_t i = 0; i < block.tensor.size(); ++i) {
            block.tensor[i] = static_cast<T>(it->second[i]);
        }
        ++used;
    }
    for (const auto& [name, tensor] : records) {
        if (name.rfind("__meta.", 0) == 0) {
            meta[name.substr(7)] = tensor[0];
        } else if (!params.contains(name)) {
            throw LoadError("checkpoint '" + path + "': unknown parameter '" + name +
                            "' (model/config mismatch)");
        }
    }
    (void)used;
    return meta;
}

} // namespace trajpred
