#include "trc/checkpoint.hpp"

#include <zlib.h>

#include <json.hpp>

#include "trc/common.hpp"
#include "trc/config_io.hpp"
#include "trc/wire.hpp"

namespace trc {

namespace {

constexpr char kMagic[4] = {'T', 'R', 'C', 'K'};
constexpr const char* kFormatTag = "trc-checkpoint-v1";

using json = nlohmann::json;

std::uint32_t crc_of(const std::string& buf, std::size_t from, std::size_t to) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()) + from,
              static_cast<uInt>(to - from)));
}

}  // namespace

void save_checkpoint(const QueryModel& model, std::int64_t step, const std::string& path) {
    json manifest;
    manifest["format"] = kFormatTag;
    manifest["config"] = model_config_to_json(model.config());
    manifest["step"] = step;
    json plist = json::array();
    for (const auto& [name, t] : model.named_parameters())
        plist.push_back(json{{"name", name}, {"shape", t.shape()}});
    manifest["params"] = std::move(plist);

    const std::string mbytes = manifest.dump();  // sorted keys: stable bytes

    std::string buf;
    buf.append(kMagic, 4);
    wire::put_u32(buf, static_cast<std::uint32_t>(mbytes.size()));
    const std::size_t checked_from = buf.size();
    buf += mbytes;
    for (const auto& [name, t] : model.named_parameters())
        for (double v : t.values()) wire::put_f64(buf, v);
    const std::uint32_t crc = crc_of(buf, checked_from, buf.size());
    wire::put_u32(buf, crc);

    wire::write_file(path, buf);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const std::string buf = wire::read_file(path);
    wire::Reader r(buf);
    if (r.bytes(4) != std::string(kMagic, 4)) throw FormatError("not a checkpoint file");
    const std::uint32_t mlen = r.u32();
    const std::size_t checked_from = r.offset();
    const std::string mbytes = r.bytes(mlen);

    json manifest;
    try {
        manifest = json::parse(mbytes);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
    }

    ModelConfig cfg;
    std::int64_t step = 0;
    std::vector<std::pair<std::string, std::vector<int>>> expected;
    try {
        if (manifest.at("format").get<std::string>() != kFormatTag)
            throw FormatError("unsupported checkpoint format tag");
        cfg = model_config_from_json(manifest.at("config"));
        step = manifest.at("step").get<std::int64_t>();
        for (const auto& p : manifest.at("params"))
            expected.emplace_back(p.at("name").get<std::string>(),
                                  p.at("shape").get<std::vector<int>>());
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
    } catch (const ValidationError& e) {
        // A config that fails validation inside a checkpoint is file damage,
        // not a user mistake.
        throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
    }

    LoadedCheckpoint out{QueryModel(cfg, 0), step};
    const auto& params = out.model.named_parameters();
    if (params.size() != expected.size())
        throw FormatError("checkpoint parameter list does not match model");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].first != expected[i].first || params[i].second.shape() != expected[i].second)
            throw FormatError("checkpoint parameter list does not match model");
    }
    for (const auto& [name, t] : params) {
        Tensor tensor = t;  // shared handle; filling it updates the model
        for (double& v : tensor.values()) v = r.f64();
    }

    const std::size_t payload_end = r.offset();
    const std::uint32_t stored = r.u32();
    if (!r.exhausted()) throw FormatError("trailing bytes after checkpoint");
    if (stored != crc_of(buf, checked_from, payload_end))
        throw FormatError("checkpoint checksum mismatch");
    return out;
}

}  // namespace trc
