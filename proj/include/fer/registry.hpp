#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fer {

class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IndexEntry {
    std::string run_id;        // "dataset" for dataset-level artifacts
    std::string kind;          // manifest, metrics, checkpoint, eval, report, ...
    std::string architecture;  // "-" when not tied to one
    std::string path;          // relative to the registry root
    std::string sha256;

    friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

/// On-disk experiment store.
///
///   <root>/index.tsv                 append-only artifact index
///   <root>/dataset/manifest.txt      dataset manifest (counts, histograms, hash)
///   <root>/dataset/norm_stats.txt    training-split intensity statistics
///   <root>/runs/run-NNNN/...         one directory per run
///
/// Files are written once; writing an existing artifact is an error.
class RunRegistry {
public:
    explicit RunRegistry(std::filesystem::path root);

    /// $FER_REGISTRY when set, otherwise ./fer-registry.
    static std::filesystem::path default_root();

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path dataset_dir() const { return root_ / "dataset"; }
    std::filesystem::path run_dir(std::string_view run_id) const;

    /// Reserves the next run id (run-0001, run-0002, ...) by creating its directory.
    std::string create_run();
    /// Existing run ids in ascending order.
    std::vector<std::string> run_ids() const;
    bool has_run(std::string_view run_id) const;

    /// Hashes `artifact` (absolute or root-relative) and appends it to the index.
    /// The index is rewritten through a temporary file and renamed into place.
    IndexEntry record(std::string_view run_id, std::string_view kind, std::string_view architecture,
                      const std::filesystem::path& artifact);

    std::vector<IndexEntry> index() const;

    /// Every indexed artifact that is missing or whose content hash changed.
    std::vector<std::string> verify() const;

private:
    std::filesystem::path root_;
};

/// Creates `path` with `content`; throws RegistryError when it already exists.
void write_new_file(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fer
