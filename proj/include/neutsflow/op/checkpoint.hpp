#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neutsflow/numerics/parameters.hpp"
#include "neutsflow/op/config.hpp"

namespace neutsflow::op {

/// Versioned binary container: hyperparameters, creation seed, trained tensors,
/// auxiliary tensors (e.g. data scaling) and free-form string attributes.
/// Layout: "NTSF", u32 version, then length-prefixed sections; all little-endian.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    ModelConfig config;
    std::uint64_t seed = 0;
    numerics::ParameterSet params;
    numerics::ParameterSet buffers;
    std::vector<std::pair<std::string, std::string>> attributes;

    const std::string* attribute(std::string_view key) const;
    void set_attribute(std::string key, std::string value);
};

std::string serialize(const Checkpoint& ckpt);
Checkpoint deserialize(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace neutsflow::op
