#include "hamlearn/manifest.hpp"

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/version.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <openssl/opensslv.h>

namespace hamlearn {

void RunManifest::add_artifact(const std::filesystem::path& path, const std::filesystem::path& root) {
    Artifact a;
    const auto rel = std::filesystem::relative(path, root);
    const bool inside = !rel.empty() && rel.native().rfind("..", 0) != 0;
    a.path = (inside ? rel : path).generic_string();
    a.sha256 = file_sha256(path);
    a.bytes = std::filesystem::file_size(path);
    artifacts.push_back(std::move(a));
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command_line"] = command_line;
    j["config_sha256"] = config_digest;
    j["seeds"] = seeds;
    auto files = nlohmann::ordered_json::array();
    for (const auto& a : artifacts) files.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    j["artifacts"] = files;
    j["versions"] = versions;
    j["wall_seconds"] = wall_times;
    j["metrics"] = metrics;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        RunManifest m;
        m.command_line = j.at("command_line").get<std::string>();
        m.config_digest = j.at("config_sha256").get<std::string>();
        m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
        for (const auto& a : j.at("artifacts"))
            m.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>(),
                                   a.at("bytes").get<std::uintmax_t>()});
        m.versions = j.at("versions").get<std::map<std::string, std::string>>();
        m.wall_times = j.at("wall_seconds").get<std::map<std::string, double>>();
        m.metrics = j.at("metrics").get<std::map<std::string, double>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad manifest: ") + e.what());
    }
}

std::map<std::string, std::string> build_versions() {
    std::map<std::string, std::string> v;
    v["hamlearn"] = HAMLEARN_VERSION;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    v["openssl"] = OPENSSL_VERSION_TEXT;
#if defined(__clang__)
    v["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
    v["compiler"] = "gcc " __VERSION__;
#endif
    return v;
}

std::filesystem::path write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    write_text_file(path, manifest.to_json());
    return path;
}

}  // namespace hamlearn
