#pragma once

// Shared helpers for the unit tests: fixture locations, a scratch directory
// that cleans up after itself, and small file utilities.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testsup {

inline std::filesystem::path fixture_dir() { return ERRTAX_FIXTURE_DIR; }

inline std::filesystem::path fixture_path(const std::string& name) {
    return fixture_dir() / name;
}

inline std::filesystem::path prompt_dir() { return ERRTAX_PROMPT_DIR; }

// Unique scratch directory under the system temp root, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            path_ = base / ("errtax-" + tag + "-" + std::to_string(i));
            if (std::filesystem::create_directories(path_)) break;
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace testsup
