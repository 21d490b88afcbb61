#pragma once

#include "hamlearn/dynamics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hamlearn {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_shortest(double v);

/// Trajectory CSV with header `t,q1..qd,p1..pd`, one row per state.
std::string trajectory_to_csv(const Trajectory& traj);
/// Throws FormatError on malformed input or a non-uniform time grid.
Trajectory trajectory_from_csv(std::string_view text);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Every `*.csv` file in `dir`, sorted by filename.
std::vector<Trajectory> read_corpus_dir(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see partial output.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace hamlearn
