#pragma once

#include <filesystem>
#include <string_view>

#include "roadrisk/multinet.hpp"

namespace roadrisk {

/// Weight container: one magic line ("MULTINET 1"), one line of JSON
/// describing the structure (profile, seed, input sides, layer specs and
/// label vocabularies — the file is self-describing), then the raw
/// little-endian float32 values of every parameter tensor in declaration
/// order. Writing the same model twice yields identical bytes.
inline constexpr std::string_view kModelMagic = "MULTINET";
inline constexpr int kModelVersion = 1;

/// Throws std::runtime_error when the path cannot be written.
void save_model(const MultiNet& model, const std::filesystem::path& path);

/// Throws std::runtime_error for a missing file, bad magic line, unsupported
/// version, malformed header, vocabulary/shape disagreement, truncated or
/// oversized payload.
MultiNet load_model(const std::filesystem::path& path);

}  // namespace roadrisk
