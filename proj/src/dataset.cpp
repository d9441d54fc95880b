#include "fer/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fer/hashing.hpp"
#include "fer/keyed_stream.hpp"

namespace fer {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral"};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string_view unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

Split split_from_usage(std::string_view tag, std::size_t row) {
    if (tag == "Training") return Split::train;
    if (tag == "PublicTest") return Split::validation;
    if (tag == "PrivateTest") return Split::test;
    throw DatasetError(row, "unknown usage tag '" + std::string(tag) + "'");
}

GrayImage parse_pixels(std::string_view text, std::size_t row) {
    std::vector<std::uint8_t> pixels;
    pixels.reserve(kPixelCount);
    const char* p = text.data();
    const char* end = p + text.size();
    while (p < end) {
        while (p < end && *p == ' ') ++p;
        if (p == end) break;
        int value = 0;
        auto [next, ec] = std::from_chars(p, end, value);
        if (ec != std::errc{} || (next < end && *next != ' '))
            throw DatasetError(row, "malformed pixel value");
        if (value < 0 || value > 255)
            throw DatasetError(row, "pixel value " + std::to_string(value) + " outside [0, 255]");
        pixels.push_back(static_cast<std::uint8_t>(value));
        p = next;
    }
    if (pixels.size() != kPixelCount)
        throw DatasetError(row, "expected " + std::to_string(kPixelCount) + " pixels, found " +
                                    std::to_string(pixels.size()));
    return GrayImage(kImageSide, kImageSide, std::move(pixels));
}

void append_row(std::string& out, const Sample& s) {
    out += std::to_string(s.label);
    out += ',';
    for (std::size_t i = 0; i < s.image.data.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(s.image.data[i]);
    }
    out += ',';
    out += usage_tag(s.split);
    out += '\n';
}

constexpr std::string_view kHeader = "emotion,pixels,Usage\n";

}  // namespace

DatasetError::DatasetError(std::size_t row, const std::string& what)
    : std::runtime_error(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}

std::string_view split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    throw std::invalid_argument("invalid split");
}

Split parse_split_name(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw std::invalid_argument("unknown split '" + std::string(name) + "' (expected train, validation or test)");
}

std::string_view usage_tag(Split split) {
    switch (split) {
        case Split::train: return "Training";
        case Split::validation: return "PublicTest";
        case Split::test: return "PrivateTest";
    }
    throw std::invalid_argument("invalid split");
}

std::string_view class_name(int label) {
    if (label < 0 || label >= kNumClasses)
        throw std::out_of_range("expression label " + std::to_string(label) + " outside 0..6");
    return kClassNames[static_cast<std::size_t>(label)];
}

std::vector<Sample> Dataset::split(Split which) const {
    std::vector<Sample> out;
    out.reserve(stats.split_counts[static_cast<std::size_t>(which)]);
    for (const auto& s : samples)
        if (s.split == which) out.push_back(s);
    return out;
}

Dataset parse_fer2013(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError(0, "cannot open dataset file " + path.string());
    return parse_fer2013(in);
}

Dataset parse_fer2013(std::istream& in) {
    Dataset ds;
    std::string line;
    if (!std::getline(in, line)) {
        ds.content_hash = content_hash(ds.samples);
        return ds;
    }
    {
        // header: emotion,pixels,Usage (case-insensitive, any column order)
        std::string lowered(trim(line));
        std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lowered.find("emotion") == std::string::npos || lowered.find("pixels") == std::string::npos ||
            lowered.find("usage") == std::string::npos)
            throw DatasetError(0, "missing header row 'emotion,pixels,Usage'");
    }

    std::array<std::size_t, kNumSplits> next_index{};
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty()) continue;
        ++row;
        const auto c1 = view.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
        if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos)
            throw DatasetError(row, "expected 3 fields (emotion, pixels, usage)");

        const auto emotion_text = unquote(view.substr(0, c1));
        int label = -1;
        auto [ptr, ec] = std::from_chars(emotion_text.data(), emotion_text.data() + emotion_text.size(), label);
        if (ec != std::errc{} || ptr != emotion_text.data() + emotion_text.size())
            throw DatasetError(row, "malformed emotion '" + std::string(emotion_text) + "'");
        if (label < 0 || label >= kNumClasses)
            throw DatasetError(row, "emotion " + std::to_string(label) + " outside 0..6");

        Sample s;
        s.image = parse_pixels(unquote(view.substr(c1 + 1, c2 - c1 - 1)), row);
        s.label = label;
        s.split = split_from_usage(unquote(view.substr(c2 + 1)), row);
        s.index = next_index[static_cast<std::size_t>(s.split)]++;
        ds.samples.push_back(std::move(s));
    }
    ds.stats = compute_stats(ds.samples);
    ds.content_hash = content_hash(ds.samples);
    return ds;
}

std::string serialize_fer2013(std::span<const Sample> samples) {
    std::string out(kHeader);
    out.reserve(kHeader.size() + samples.size() * (kPixelCount * 4 + 16));
    for (const auto& s : samples) append_row(out, s);
    return out;
}

DatasetStats compute_stats(std::span<const Sample> samples) {
    DatasetStats st;
    for (const auto& s : samples) {
        const auto sp = static_cast<std::size_t>(s.split);
        ++st.split_counts[sp];
        ++st.class_counts[sp][static_cast<std::size_t>(s.label)];
        ++st.total;
    }
    return st;
}

std::string content_hash(std::span<const Sample> samples) {
    Sha256 h;
    h.update(kHeader);
    std::string row;
    for (const auto& s : samples) {
        row.clear();
        append_row(row, s);
        h.update(row);
    }
    return h.finish();
}

std::vector<Sample> subset(std::span<const Sample> samples, Split split, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("subset fraction must lie in (0, 1]");

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == split) members.push_back(i);
    if (members.empty())
        throw std::invalid_argument("cannot subset empty " + std::string(split_name(split)) + " split");

    if (fraction == 1.0) {
        std::vector<Sample> out;
        out.reserve(members.size());
        for (auto i : members) out.push_back(samples[i]);
        return out;
    }

    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (auto i : members) by_class[static_cast<std::size_t>(samples[i].label)].push_back(i);

    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        const auto want = static_cast<std::size_t>(std::llround(static_cast<double>(pool.size()) * fraction));
        KeyedStream stream(StreamDomain::subset, seed, static_cast<std::uint64_t>(split), c);
        // partial Fisher-Yates: the first `want` slots are the selection
        for (std::size_t i = 0; i < want && i + 1 < pool.size(); ++i) {
            const auto j = i + stream.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        keep.insert(keep.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
    }
    std::sort(keep.begin(), keep.end());

    std::vector<Sample> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(samples[i]);
    return out;
}

void write_manifest(std::ostream& out, const DatasetManifest& m) {
    out << "# FER2013 dataset manifest\n";
    out << "format = fer-dataset-manifest/1\n";
    out << "source = " << m.source << '\n';
    out << "content_hash = " << m.content_hash << '\n';
    out << "total = " << m.stats.total << '\n';
    for (int s = 0; s < kNumSplits; ++s) {
        const auto name = split_name(static_cast<Split>(s));
        out << "count." << name << " = " << m.stats.split_counts[static_cast<std::size_t>(s)] << '\n';
        out << "classes." << name << " = ";
        for (int c = 0; c < kNumClasses; ++c)
            out << (c ? "," : "") << m.stats.class_counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
        out << '\n';
    }
}

DatasetManifest read_manifest(std::istream& in) {
    std::map<std::string, std::string, std::less<>> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw DatasetError(0, "manifest line without '=': " + std::string(view));
        kv.emplace(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DatasetError(0, "manifest missing key '" + key + "'");
        return it->second;
    };
    auto to_size = [](const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); };

    if (get("format") != "fer-dataset-manifest/1") throw DatasetError(0, "unsupported manifest format");
    DatasetManifest m;
    m.source = get("source");
    m.content_hash = get("content_hash");
    m.stats.total = to_size(get("total"));
    for (int s = 0; s < kNumSplits; ++s) {
        const std::string name(split_name(static_cast<Split>(s)));
        m.stats.split_counts[static_cast<std::size_t>(s)] = to_size(get("count." + name));
        std::stringstream ss(get("classes." + name));
        std::string item;
        for (int c = 0; c < kNumClasses; ++c) {
            if (!std::getline(ss, item, ',')) throw DatasetError(0, "manifest class histogram too short for " + name);
            m.stats.class_counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = to_size(item);
        }
    }
    return m;
}

}  // namespace fer
