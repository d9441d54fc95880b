#pragma once

#include <filesystem>
#include <stdexcept>

#include "fer/network.hpp"
#include "json.hpp"

namespace fer {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes `<stem>.json` (architecture, seed, per-tensor name/shape/dtype/offset/sha256)
/// and `<stem>.bin` (raw tensor bytes, little-endian, in manifest order). `extra` is
/// stored under the "metadata" key. Returns the manifest path.
std::filesystem::path save_checkpoint(const Network& model, const std::filesystem::path& stem,
                                      const nlohmann::json& extra = nlohmann::json::object());

/// Rebuilds the network from the manifest and loads every tensor, verifying shape,
/// element type and content hash of each. Throws CheckpointError on any mismatch.
Network load_checkpoint(const std::filesystem::path& manifest_path);

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& manifest_path);

}  // namespace fer
