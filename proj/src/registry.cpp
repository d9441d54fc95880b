#include "fer/registry.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fer/hashing.hpp"

namespace fer {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kIndexHeader = "run_id\tkind\tarchitecture\tpath\tsha256\n";

bool is_run_name(const std::string& name) {
    return name.size() == 8 && name.rfind("run-", 0) == 0 &&
           std::all_of(name.begin() + 4, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string field(std::string_view s) {
    std::string out(s.empty() ? "-" : s);
    std::replace(out.begin(), out.end(), '\t', ' ');
    std::replace(out.begin(), out.end(), '\n', ' ');
    return out;
}

}  // namespace

void write_new_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    // "x": exclusive creation, fails if the file exists
    std::FILE* f = std::fopen(path.c_str(), "wbx");
    if (!f) {
        if (fs::exists(path)) throw RegistryError("refusing to overwrite existing file " + path.string());
        throw RegistryError("cannot create " + path.string());
    }
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    if (std::fclose(f) != 0 || !ok) throw RegistryError("short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RegistryError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunRegistry::RunRegistry(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "runs");
    fs::create_directories(dataset_dir());
}

fs::path RunRegistry::default_root() {
    if (const char* env = std::getenv("FER_REGISTRY"); env && *env) return env;
    return "fer-registry";
}

fs::path RunRegistry::run_dir(std::string_view run_id) const { return root_ / "runs" / std::string(run_id); }

std::vector<std::string> RunRegistry::run_ids() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_ / "runs")) {
        auto name = entry.path().filename().string();
        if (entry.is_directory() && is_run_name(name)) ids.push_back(std::move(name));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool RunRegistry::has_run(std::string_view run_id) const {
    return is_run_name(std::string(run_id)) && fs::is_directory(run_dir(run_id));
}

std::string RunRegistry::create_run() {
    const auto ids = run_ids();
    int next = ids.empty() ? 1 : std::stoi(ids.back().substr(4)) + 1;
    for (;; ++next) {
        if (next > 9999) throw RegistryError("run id space exhausted");
        char buf[16];
        std::snprintf(buf, sizeof buf, "run-%04d", next);
        // create_directory is the reservation: false means another process won
        if (fs::create_directory(run_dir(buf))) return buf;
    }
}

IndexEntry RunRegistry::record(std::string_view run_id, std::string_view kind, std::string_view architecture,
                               const fs::path& artifact) {
    const auto absolute = artifact.is_absolute() ? artifact : root_ / artifact;
    if (!fs::is_regular_file(absolute)) throw RegistryError("cannot index missing artifact " + absolute.string());

    IndexEntry e{field(run_id), field(kind), field(architecture),
                 fs::relative(absolute, root_).generic_string(), sha256_file(absolute)};

    const auto index_path = root_ / "index.tsv";
    std::string text = fs::exists(index_path) ? read_text_file(index_path) : std::string(kIndexHeader);
    text += e.run_id + '\t' + e.kind + '\t' + e.architecture + '\t' + e.path + '\t' + e.sha256 + '\n';

    const auto tmp = root_ / "index.tsv.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out.flush()) throw RegistryError("cannot write " + tmp.string());
    }
    fs::rename(tmp, index_path);
    return e;
}

std::vector<IndexEntry> RunRegistry::index() const {
    std::vector<IndexEntry> out;
    const auto index_path = root_ / "index.tsv";
    if (!fs::exists(index_path)) return out;
    std::istringstream in(read_text_file(index_path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        IndexEntry e;
        if (!std::getline(row, e.run_id, '\t') || !std::getline(row, e.kind, '\t') ||
            !std::getline(row, e.architecture, '\t') || !std::getline(row, e.path, '\t') ||
            !std::getline(row, e.sha256))
            throw RegistryError("malformed index line: " + line);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::string> RunRegistry::verify() const {
    std::vector<std::string> problems;
    for (const auto& e : index()) {
        const auto p = root_ / e.path;
        if (!fs::is_regular_file(p)) problems.push_back(e.path + ": missing");
        else if (sha256_file(p) != e.sha256) problems.push_back(e.path + ": content hash changed");
    }
    return problems;
}

}  // namespace fer
