#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fer/grid.hpp"

namespace fer {

inline constexpr int kImageSide = 48;
inline constexpr int kPixelCount = kImageSide * kImageSide;
inline constexpr int kNumClasses = 7;
inline constexpr int kNumSplits = 3;

enum class Split { train = 0, validation = 1, test = 2 };

std::string_view split_name(Split split);
Split parse_split_name(std::string_view name);
/// FER2013 `Usage` column value for a split ("Training", "PublicTest", "PrivateTest").
std::string_view usage_tag(Split split);

/// Expression name for a FER2013 label id; throws std::out_of_range outside 0..6.
std::string_view class_name(int label);

struct Sample {
    GrayImage image;
    int label = 0;
    Split split = Split::train;
    std::size_t index = 0;  // ordinal within its split
};

struct DatasetStats {
    std::array<std::size_t, kNumSplits> split_counts{};
    std::array<std::array<std::size_t, kNumClasses>, kNumSplits> class_counts{};
    std::size_t total = 0;

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Parse failure. `row()` is the 1-based data row (header excluded); 0 when not row-specific.
class DatasetError : public std::runtime_error {
public:
    DatasetError(std::size_t row, const std::string& what);
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

struct Dataset {
    std::vector<Sample> samples;  // file order
    DatasetStats stats;
    std::string content_hash;  // sha256 of the canonical serialization

    std::vector<Sample> split(Split which) const;
};

Dataset parse_fer2013(const std::filesystem::path& path);
Dataset parse_fer2013(std::istream& in);

/// Canonical CSV (header + one row per sample, LF line endings). Parsing the output
/// reproduces labels, usage tags and pixels exactly.
std::string serialize_fer2013(std::span<const Sample> samples);

DatasetStats compute_stats(std::span<const Sample> samples);
std::string content_hash(std::span<const Sample> samples);

/// Deterministic class-stratified subsample of one split.
///
/// Each class keeps round(count * fraction) samples, chosen by a seeded shuffle;
/// output preserves the input order. fraction == 1 returns the split unchanged.
std::vector<Sample> subset(std::span<const Sample> samples, Split split, double fraction, std::uint64_t seed);

/// Key-value manifest describing a parsed dataset.
struct DatasetManifest {
    std::string source;
    std::string content_hash;
    DatasetStats stats;
};

void write_manifest(std::ostream& out, const DatasetManifest& manifest);
DatasetManifest read_manifest(std::istream& in);

}  // namespace fer
