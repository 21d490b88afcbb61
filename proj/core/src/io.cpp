#include "hamlearn/io.hpp"

#include "hamlearn/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace hamlearn {

std::string format_shortest(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string trajectory_to_csv(const Trajectory& traj) {
    const std::size_t d = traj.dim();
    std::string out = "t";
    for (std::size_t i = 1; i <= d; ++i) out += ",q" + std::to_string(i);
    for (std::size_t i = 1; i <= d; ++i) out += ",p" + std::to_string(i);
    out += '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        out += format_shortest(traj.time(k));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) {
            out += ',';
            out += format_shortest(traj.positions()(i, c));
        }
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) {
            out += ',';
            out += format_shortest(traj.momenta()(i, c));
        }
        out += '\n';
    }
    return out;
}

namespace {

double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw FormatError("line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
    return v;
}

std::vector<std::string_view> split_fields(std::string_view row) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = row.find(',', start);
        out.push_back(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

Trajectory trajectory_from_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty()) throw FormatError("trajectory CSV is empty");
    const auto header = split_fields(lines[0]);
    if (header.size() < 3 || header.size() % 2 == 0 || header[0] != "t")
        throw FormatError("trajectory CSV header must be t,q1..qd,p1..pd");
    const std::size_t d = (header.size() - 1) / 2;
    for (std::size_t i = 0; i < d; ++i) {
        if (header[1 + i] != "q" + std::to_string(i + 1) || header[1 + d + i] != "p" + std::to_string(i + 1))
            throw FormatError("trajectory CSV header must be t,q1..qd,p1..pd");
    }
    const std::size_t n = lines.size() - 1;
    if (n < 2) throw FormatError("trajectory CSV needs at least two rows");

    Mat q(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    Mat p(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto fields = split_fields(lines[k + 1]);
        if (fields.size() != header.size())
            throw FormatError("line " + std::to_string(k + 2) + ": expected " + std::to_string(header.size()) +
                              " fields");
        t[k] = parse_double(fields[0], k + 2);
        for (std::size_t i = 0; i < d; ++i) {
            q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = parse_double(fields[1 + i], k + 2);
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = parse_double(fields[1 + d + i], k + 2);
        }
    }
    const double h = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
    if (!(h > 0.0)) throw FormatError("trajectory times must increase");
    for (std::size_t k = 0; k < n; ++k) {
        const double expected = t[0] + static_cast<double>(k) * h;
        if (std::abs(t[k] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            throw FormatError("trajectory times are not equispaced at row " + std::to_string(k + 2));
    }
    // Recover the recorded step exactly when the first interval reproduces every time stamp.
    const double h0 = t[1] - t[0];
    bool exact = true;
    for (std::size_t k = 0; k < n && exact; ++k) exact = t[0] + static_cast<double>(k) * h0 == t[k];
    return Trajectory(std::move(q), std::move(p), t[0], exact ? h0 : h);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + path.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ConfigError("failed writing '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    write_text_file(path, trajectory_to_csv(traj));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    try {
        return trajectory_from_csv(read_text_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<Trajectory> read_corpus_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("corpus directory '" + dir.string() + "' not found");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("corpus directory '" + dir.string() + "' has no CSV files");
    std::vector<Trajectory> corpus;
    for (const auto& f : files) corpus.push_back(read_trajectory_csv(f));
    return corpus;
}

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
        throw Error("SHA-256 computation failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

}  // namespace hamlearn
