#pragma once

#include <optional>
#include <string>

#include "kinspec/collision.hpp"

namespace kinspec {

/// File name encoding (N, scheme, diagonal rule, bump width, tolerances).
std::string collision_cache_key(int n, Scheme scheme, const CollisionOptions& opts);

/// Binary format: magic, version, key string, then row-major 64-bit floats.
void save_collision(const std::string& path, const CollisionMatrices& c, const MacroMoments& m);
/// Returns nothing when the file is absent, has another version or a different key.
std::optional<std::pair<CollisionMatrices, MacroMoments>> load_collision(const std::string& path, int n, Scheme scheme,
                                                                         const CollisionOptions& opts);

/// Loads from cache_dir when possible, otherwise assembles and writes the cache (empty dir disables caching).
std::pair<CollisionMatrices, MacroMoments> cached_collision(const std::string& cache_dir, int n,
                                                            Scheme scheme = Scheme::TensorHermite,
                                                            const CollisionOptions& opts = {});

}  // namespace kinspec
