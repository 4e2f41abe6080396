// SPDX-License-Identifier: Apache-2.0
#include "eccl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace eccl {
namespace {

std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    }
    return v;
}

}  // namespace

const Tensor& CheckpointData::get(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t.tensor;
    }
    throw std::runtime_error("checkpoint has no tensor named " + name);
}

std::string encode_checkpoint(const CheckpointData& data) {
    nlohmann::json manifest;
    manifest["tensors"] = nlohmann::json::array();
    for (const auto& t : data.tensors) {
        manifest["tensors"].push_back({{"name", t.name}, {"shape", t.tensor.shape()}, {"dtype", "f32"}});
    }
    manifest["meta"] = data.meta;
    std::string out;
    out += kCheckpointMagic;
    out += '\n';
    out += manifest.dump();
    out += '\n';
    for (const auto& t : data.tensors) {
        for (float f : t.tensor.data()) {
            const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(f));
            char buf[4];
            std::memcpy(buf, &bits, 4);
            out.append(buf, 4);
        }
    }
    return out;
}

CheckpointData decode_checkpoint(std::string_view bytes) {
    const auto first_nl = bytes.find('\n');
    if (first_nl == std::string_view::npos || bytes.substr(0, first_nl) != kCheckpointMagic) {
        throw CheckpointError("bad header: expected \"" + std::string(kCheckpointMagic) + "\"", 0);
    }
    const std::size_t manifest_start = first_nl + 1;
    const auto second_nl = bytes.find('\n', manifest_start);
    if (second_nl == std::string_view::npos) throw CheckpointError("manifest line not terminated", manifest_start);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.substr(manifest_start, second_nl - manifest_start));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("manifest is not valid JSON: ") + e.what(), manifest_start);
    }
    if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
        throw CheckpointError("manifest lacks a tensors array", manifest_start);
    }

    CheckpointData out;
    if (manifest.contains("meta")) out.meta = manifest["meta"];
    std::size_t offset = second_nl + 1;
    for (const auto& entry : manifest["tensors"]) {
        NamedTensor nt;
        try {
            nt.name = entry.at("name").get<std::string>();
            if (entry.at("dtype").get<std::string>() != "f32") throw CheckpointError("unsupported dtype for " + nt.name, manifest_start);
            const auto shape = entry.at("shape").get<Shape>();
            nt.tensor = Tensor(shape);
        } catch (const nlohmann::json::exception& e) {
            throw CheckpointError(std::string("malformed manifest entry: ") + e.what(), manifest_start);
        } catch (const std::invalid_argument& e) {
            throw CheckpointError(std::string("malformed manifest shape: ") + e.what(), manifest_start);
        }
        const std::size_t need = nt.tensor.size() * 4;
        if (bytes.size() - offset < need) {
            throw CheckpointError("truncated data for tensor " + nt.name + ": need " + std::to_string(need) +
                                      " bytes, have " + std::to_string(bytes.size() - offset),
                                  offset);
        }
        for (float& f : nt.tensor.data()) {
            std::uint32_t bits;
            std::memcpy(&bits, bytes.data() + offset, 4);
            f = std::bit_cast<float>(to_little(bits));
            offset += 4;
        }
        out.tensors.push_back(std::move(nt));
    }
    if (offset != bytes.size()) throw CheckpointError("trailing bytes after last tensor", offset);
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_checkpoint(data);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_checkpoint(ss.str());
}

void append_params(CheckpointData& data, const std::string& prefix, const NetworkParams& params, bool with_optimizer) {
    for (const auto& e : params.entries()) {
        data.tensors.push_back({prefix + e.name, e.value});
        if (with_optimizer) {
            data.tensors.push_back({prefix + e.name + "#m", e.first_moment});
            data.tensors.push_back({prefix + e.name + "#v", e.second_moment});
            data.meta["steps"][prefix + e.name] = e.step;
        }
    }
}

void restore_params(const CheckpointData& data, const std::string& prefix, NetworkParams& params, bool with_optimizer) {
    auto load = [&](const std::string& name, Tensor& dst) {
        const Tensor& src = data.get(name);
        if (src.shape() != dst.shape()) {
            throw std::runtime_error("checkpoint tensor " + name + " has shape " + shape_string(src.shape()) +
                                     ", expected " + shape_string(dst.shape()));
        }
        dst = src;
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& e = params.entry(i);
        load(prefix + e.name, e.value);
        if (with_optimizer) {
            load(prefix + e.name + "#m", e.first_moment);
            load(prefix + e.name + "#v", e.second_moment);
            const auto steps = data.meta.find("steps");
            if (steps == data.meta.end() || !steps->contains(prefix + e.name)) {
                throw std::runtime_error("checkpoint lacks optimizer step count for " + prefix + e.name);
            }
            e.step = (*steps)[prefix + e.name].get<std::int64_t>();
        }
    }
}

}  // namespace eccl
