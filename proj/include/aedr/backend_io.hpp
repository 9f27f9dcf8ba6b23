#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "aedr/linear_backend.hpp"
#include "aedr/reconstructor.hpp"

namespace aedr {

inline constexpr int kBackendSchemaVersion = 1;

/// {schema_version:1, kind:"linear_ae", name, width, height, channels,
///  latent_dim, noise_sigma, seed, mean:[...], basis:[[...]...], latent_variance:[...]}
nlohmann::json backend_to_json(const LinearAEBackend& backend);
LinearAEBackend linear_backend_from_json(const nlohmann::json& doc);

void save_backend(const LinearAEBackend& backend, const std::filesystem::path& path);

/// Loads any backend description: "linear_ae", "identity", or
/// "external" ({command:[...], pool_size, timeout_ms}).
std::unique_ptr<Reconstructor> load_backend(const std::filesystem::path& path);
LinearAEBackend load_linear_backend(const std::filesystem::path& path);

}  // namespace aedr
