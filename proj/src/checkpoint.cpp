#include "fer/checkpoint.hpp"

#include <fstream>
#include <vector>

#include "fer/hashing.hpp"

namespace fer {

namespace {

std::span<const std::byte> bytes_of(const torch::Tensor& t) {
    return {static_cast<const std::byte*>(t.data_ptr()), t.nbytes()};
}

}  // namespace

std::filesystem::path save_checkpoint(const Network& model, const std::filesystem::path& stem,
                                      const nlohmann::json& extra) {
    auto manifest_path = stem;
    manifest_path += ".json";
    auto payload_path = stem;
    payload_path += ".bin";
    if (!stem.parent_path().empty()) std::filesystem::create_directories(stem.parent_path());

    std::ofstream payload(payload_path, std::ios::binary | std::ios::trunc);
    if (!payload) throw CheckpointError("cannot write " + payload_path.string());

    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    Sha256 payload_hash;
    for (const auto& [name, tensor] : model->full_state()) {
        auto t = tensor.detach().contiguous().cpu();
        const auto data = bytes_of(t);
        payload.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        payload_hash.update(data);
        tensors.push_back({{"name", name},
                           {"shape", t.sizes().vec()},
                           {"dtype", std::string(c10::toString(t.scalar_type()))},
                           {"offset", offset},
                           {"bytes", data.size()},
                           {"sha256", sha256_hex(data)}});
        offset += data.size();
    }
    payload.close();
    if (!payload) throw CheckpointError("failed writing " + payload_path.string());

    nlohmann::json manifest{{"format", "fer-checkpoint/1"},
                            {"architecture", model->spec().name},
                            {"code", model->spec().code},
                            {"seed", model->seed()},
                            {"spec", model->spec()},
                            {"frozen_layers", model->frozen_layers()},
                            {"payload", payload_path.filename().string()},
                            {"payload_sha256", payload_hash.finish()},
                            {"tensors", std::move(tensors)},
                            {"metadata", extra}};
    std::ofstream out(manifest_path, std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw CheckpointError("failed writing " + manifest_path.string());
    return manifest_path;
}

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw CheckpointError("cannot open checkpoint manifest " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "fer-checkpoint/1")
        throw CheckpointError("unsupported checkpoint format in " + manifest_path.string());
    return manifest;
}

Network load_checkpoint(const std::filesystem::path& manifest_path) {
    const auto manifest = read_checkpoint_manifest(manifest_path);
    const auto spec = manifest.at("spec").get<ArchitectureSpec>();
    auto model = instantiate(spec, manifest.at("seed").get<std::uint64_t>());

    const auto payload_path = manifest_path.parent_path() / manifest.at("payload").get<std::string>();
    std::ifstream payload(payload_path, std::ios::binary);
    if (!payload) throw CheckpointError("cannot open checkpoint payload " + payload_path.string());

    const auto& entries = manifest.at("tensors");
    auto state = model->full_state();
    if (entries.size() != state.size())
        throw CheckpointError("checkpoint holds " + std::to_string(entries.size()) + " tensors, model expects " +
                              std::to_string(state.size()));

    torch::NoGradGuard no_grad;
    std::vector<char> buf;
    for (std::size_t i = 0; i < state.size(); ++i) {
        auto& [name, tensor] = state[i];
        const auto& e = entries[i];
        if (e.at("name").get<std::string>() != name)
            throw CheckpointError("tensor " + std::to_string(i) + " is '" + e.at("name").get<std::string>() +
                                  "', model expects '" + name + "'");
        if (e.at("shape").get<std::vector<std::int64_t>>() != tensor.sizes().vec())
            throw CheckpointError("shape mismatch for " + name);
        if (e.at("dtype").get<std::string>() != c10::toString(tensor.scalar_type()))
            throw CheckpointError("element type mismatch for " + name);
        const auto nbytes = e.at("bytes").get<std::size_t>();
        if (nbytes != tensor.nbytes()) throw CheckpointError("byte count mismatch for " + name);
        buf.resize(nbytes);
        payload.seekg(static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
        payload.read(buf.data(), static_cast<std::streamsize>(nbytes));
        if (static_cast<std::size_t>(payload.gcount()) != nbytes) throw CheckpointError("truncated payload at " + name);
        const auto bytes = std::as_bytes(std::span(buf));
        if (sha256_hex(bytes) != e.at("sha256").get<std::string>())
            throw CheckpointError("content hash mismatch for " + name);
        auto src = torch::from_blob(buf.data(), tensor.sizes(), tensor.options()).clone();
        tensor.copy_(src);
    }
    const auto frozen = manifest.value("frozen_layers", std::size_t{0});
    if (frozen > 0) model->freeze_frontend(frozen);
    model->eval();
    return model;
}

}  // namespace fer
