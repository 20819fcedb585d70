#pragma once

#include "seanet/nn.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace seanet {

/// Free-form string annotations stored alongside the weights (epoch,
/// validation score, config digest, ...).
using CheckpointMeta = std::map<std::string, std::string>;

/// Checkpoint container format, version 1:
///   bytes 0..7    magic "SEANET01"
///   bytes 8..15   little-endian uint64: JSON header size in bytes
///   header        UTF-8 JSON {"format", "tensors": [{name, kind, shape}...],
///                 "meta": {string: string}}
///   payload       for each tensor, in header order: raw little-endian
///                 float32 values
/// Parameters and normalization buffers are stored by hierarchical name;
/// loading matches strictly by name and shape.
inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'A', 'N', 'E', 'T', '0', '1'};

namespace checkpoint_detail {

inline void require_little_endian(const char* op) {
    SEANET_CHECK(std::endian::native == std::endian::little, op,
                 ": checkpoint format is little-endian only");
}

/// Parameters first, then buffers, each kind in registration order.
inline std::vector<std::pair<std::string, Tensor<float>>> state_entries(
    const Module<float>& model) {
    auto out = model.named_parameters();
    for (auto& [name, t] : model.named_buffers()) out.emplace_back(name, t);
    return out;
}

} // namespace checkpoint_detail

/// One header row of an on-disk checkpoint.
struct CheckpointEntry {
    std::string name;
    std::string kind; // "param" or "buffer"
    Shape shape;
};

/// Header contents without the payload: enough to validate against a model
/// or report what a file holds.
struct CheckpointInfo {
    std::vector<CheckpointEntry> tensors;
    CheckpointMeta meta;
    int64_t payload_offset = 0;
};

inline CheckpointInfo read_checkpoint_info(const std::filesystem::path& file) {
    checkpoint_detail::require_little_endian("read_checkpoint_info");
    std::ifstream in(file, std::ios::binary);
    SEANET_CHECK(in.good(), "cannot open checkpoint: ", file.string());

    char magic[8];
    in.read(magic, 8);
    SEANET_CHECK(in.gcount() == 8 && std::equal(magic, magic + 8, kCheckpointMagic),
                 "not a checkpoint file (bad magic): ", file.string());
    uint64_t header_size = 0;
    in.read(reinterpret_cast<char*>(&header_size), 8);
    SEANET_CHECK(in.gcount() == 8 && header_size > 0 && header_size < (64u << 20),
                 "corrupt checkpoint header size: ", file.string());
    std::string header(header_size, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_size));
    SEANET_CHECK(static_cast<uint64_t>(in.gcount()) == header_size,
                 "truncated checkpoint header: ", file.string());

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed checkpoint header in " + file.string() + ": " + e.what());
    }
    SEANET_CHECK(j.value("format", 0) == 1, "unsupported checkpoint format version in ",
                 file.string());

    CheckpointInfo info;
    info.payload_offset = 16 + static_cast<int64_t>(header_size);
    try {
        for (const auto& t : j.at("tensors")) {
            CheckpointEntry e;
            e.name = t.at("name").get<std::string>();
            e.kind = t.at("kind").get<std::string>();
            for (const auto& d : t.at("shape")) e.shape.push_back(d.get<int64_t>());
            info.tensors.push_back(std::move(e));
        }
        if (j.contains("meta"))
            info.meta = j.at("meta").get<CheckpointMeta>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed checkpoint header in " + file.string() + ": " + e.what());
    }
    return info;
}

/// Write all parameters and buffers of `model` (with metadata) to `file`.
/// The write goes to a sibling temporary first so an interrupted save cannot
/// leave a half-written checkpoint behind.
inline void save_checkpoint(const std::filesystem::path& file, const Module<float>& model,
                            const CheckpointMeta& meta = {}) {
    checkpoint_detail::require_little_endian("save_checkpoint");
    const auto params = model.named_parameters();
    const auto buffers = model.named_buffers();

    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, t] : params)
        tensors.push_back({{"name", name}, {"kind", "param"}, {"shape", t.shape()}});
    for (const auto& [name, t] : buffers)
        tensors.push_back({{"name", name}, {"kind", "buffer"}, {"shape", t.shape()}});
    const std::string header =
        nlohmann::json{{"format", 1}, {"tensors", tensors}, {"meta", meta}}.dump();

    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        SEANET_CHECK(out.good(), "cannot write checkpoint: ", tmp.string());
        out.write(kCheckpointMagic, 8);
        const uint64_t header_size = header.size();
        out.write(reinterpret_cast<const char*>(&header_size), 8);
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        for (const auto& entries : {params, buffers})
            for (const auto& [name, t] : entries)
                out.write(reinterpret_cast<const char*>(t.data()),
                          static_cast<std::streamsize>(t.numel() * sizeof(float)));
        SEANET_CHECK(out.good(), "write failed for checkpoint: ", tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

/// Load a checkpoint saved by `save_checkpoint` into `model`, matching
/// strictly by name: every model tensor must appear in the file with the
/// same shape, and the file may not contain extras. Returns the metadata.
inline CheckpointMeta load_checkpoint(const std::filesystem::path& file, Module<float>& model) {
    const CheckpointInfo info = read_checkpoint_info(file);

    auto state = checkpoint_detail::state_entries(model);
    std::map<std::string, Tensor<float>> by_name;
    for (auto& [name, t] : state) by_name.emplace(name, t);
    SEANET_CHECK(by_name.size() == state.size(), "model has duplicate tensor names");
    SEANET_CHECK(info.tensors.size() == state.size(), "checkpoint ", file.string(), " holds ",
                 info.tensors.size(), " tensors but the model has ", state.size());

    std::ifstream in(file, std::ios::binary);
    SEANET_CHECK(in.good(), "cannot open checkpoint: ", file.string());
    in.seekg(info.payload_offset);
    for (const auto& entry : info.tensors) {
        const auto it = by_name.find(entry.name);
        SEANET_CHECK(it != by_name.end(), "checkpoint tensor '", entry.name,
                     "' does not exist in the model");
        Tensor<float> dst = it->second;
        SEANET_CHECK(entry.shape == dst.shape(), "shape mismatch for '", entry.name,
                     "': checkpoint has ", shape_str(entry.shape), ", model has ",
                     shape_str(dst.shape()));
        in.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.numel() * sizeof(float)));
        SEANET_CHECK(in.gcount() == dst.numel() * static_cast<int64_t>(sizeof(float)),
                     "truncated checkpoint payload at '", entry.name, "' in ", file.string());
        by_name.erase(it); // each model tensor may be written exactly once
    }
    SEANET_CHECK(by_name.empty(), "checkpoint ", file.string(), " left ", by_name.size(),
                 " model tensors unset, first: '", by_name.begin()->first, "'");
    return info.meta;
}

} // namespace seanet
