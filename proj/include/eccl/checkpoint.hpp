// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "eccl/params.hpp"

namespace eccl {

/// Parameter file layout:
///   line 1: "ECCLNN v1"
///   line 2: one-line JSON manifest {"tensors":[{"name","shape","dtype":"f32"}...],"meta":{...}}
///   then raw little-endian float32 data, concatenated in manifest order.
inline constexpr std::string_view kCheckpointMagic = "ECCLNN v1";

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct CheckpointData {
    std::vector<NamedTensor> tensors;
    nlohmann::json meta = nlohmann::json::object();

    const Tensor& get(const std::string& name) const;
};

class CheckpointError : public std::runtime_error {
public:
    CheckpointError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

std::string encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Stores each parameter as "<prefix><name>"; with_optimizer adds "<prefix><name>#m", "#v"
/// tensors and the step counts under meta["steps"].
void append_params(CheckpointData& data, const std::string& prefix, const NetworkParams& params, bool with_optimizer);

/// Overwrites params (whose layout is the expected one) from data. Missing
/// tensors or shape mismatches throw std::runtime_error naming the tensor.
void restore_params(const CheckpointData& data, const std::string& prefix, NetworkParams& params, bool with_optimizer);

}  // namespace eccl
