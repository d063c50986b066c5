#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "invdes/diffnum/nn.hpp"

namespace invdes::diffnum {

inline constexpr int kWeightFormatVersion = 1;

/// JSON text {format_version, tensors: [{name, shape, data}]} in list order.
std::string serialize_weights(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> parse_weights(std::string_view text);

/// Copies stored values into `dst` by name. Throws on a missing name, an
/// unexpected extra tensor or a shape mismatch.
void load_weights_into(const std::vector<NamedTensor>& dst, std::string_view text);

void save_weights_file(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path);
void load_weights_file(const std::vector<NamedTensor>& dst, const std::filesystem::path& path);

/// FNV-1a over names, shapes and the raw bytes of every value.
std::uint64_t weight_hash(const std::vector<NamedTensor>& tensors);

}  // namespace invdes::diffnum
