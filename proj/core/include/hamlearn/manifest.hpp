#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hamlearn {

struct Artifact {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

/// Record of one command invocation. Artifact paths are relative to the
/// manifest's directory when they live below it.
struct RunManifest {
    std::string command_line;
    std::string config_digest;
    std::map<std::string, std::uint64_t> seeds;
    std::vector<Artifact> artifacts;
    std::map<std::string, std::string> versions;
    std::map<std::string, double> wall_times;
    std::map<std::string, double> metrics;

    /// Hashes `path` and appends it.
    void add_artifact(const std::filesystem::path& path, const std::filesystem::path& root);

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

/// Library, compiler and dependency versions.
std::map<std::string, std::string> build_versions();

/// Writes `manifest.json` into `dir` and returns its path.
std::filesystem::path write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace hamlearn
