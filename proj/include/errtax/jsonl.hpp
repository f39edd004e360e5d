#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "errtax/errors.hpp"

namespace errtax::jsonl {

using json = nlohmann::json;

// Reserved key marking a provenance header record. Readers skip headers so
// pipeline artifacts stay loadable by the plain record readers.
inline constexpr const char* kHeaderKey = "_artifact";

// Invokes fn(record, line_number) for every non-blank line. Line numbers are
// 1-based. Malformed lines raise ParseError with the offending line.
inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw ParseError("malformed JSON in " + path.filename().string(), line_no);
        if (record.is_object() && record.contains(kHeaderKey)) continue;
        fn(record, line_no);
    }
}

// First record when it is a provenance header, else nullopt.
inline std::optional<json> read_header(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_object() && record.contains(kHeaderKey)) return record;
        return std::nullopt;
    }
    return std::nullopt;
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
    }

    // nlohmann::json keeps object keys sorted, so output is canonical.
    void write(const json& record) { out_ << record.dump() << '\n'; }

private:
    std::ofstream out_;
};

}  // namespace errtax::jsonl
